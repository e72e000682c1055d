import tempered_shocks


def test_version():
    """Check to see that we can get the package version"""
    assert tempered_shocks.__version__ is not None


def test_public_api():
    """Check that the main entry points are exported"""
    for name in ("ShockMagics", "ProcessParams", "btsfpp_pmf", "reliability", "ShockModelError"):
        assert hasattr(tempered_shocks, name), name
