"""
IPython magic module for tempered-shocks.

This module contains the IPython integration:
- ShockMagics with the %shocks line magic, which runs any command-line command
- Extension loading/unloading
"""

import shlex

from IPython.core.magic import Magics, line_magic, magics_class

from . import cli, display


@magics_class
class ShockMagics(Magics):
    """IPython magic for evaluating and checking the shock model from a notebook.

    ``%shocks <command> [flags]`` accepts the same commands and flags as the
    ``tempered-shocks`` executable and shows the resulting tables inline.
    """

    def __init__(self, shell):
        super().__init__(shell)
        self.last_result = None

    @line_magic
    def shocks(self, line):
        """
        Run a tempered-shocks command.

        Usage:
            %shocks pmf --alpha 0.7 --theta 1 --t 0.5 --max-h 4
            %shocks reliability --threshold yule-simon:rho=1.5 --compare
            %shocks simulate --quantity laplace --paths 20000

        Tables are rendered as HTML in notebooks and as text in a terminal. Flags that
        write files (--out, --raw, the figures command) write them as usual. The last
        result is kept in ``last_result``.
        """
        argv = shlex.split(line)
        if not argv:
            print("❌ Error: No command given.")
            print(f"   Usage: %shocks {{{','.join(cli.COMMANDS)}}} [flags]")
            return

        try:
            args, result = cli.run_command(argv)
            self.last_result = result

            display.display_results(result)

            if getattr(args, "out", None) or getattr(args, "raw", None):
                cli.emit(args, result)
                print(f"💾 Output written to {args.out or args.raw}")

            if result.report is not None and not result.report.passed:
                threshold = result.report.config["z_threshold"]
                print(f"⚠️ {len(result.report.failures)} comparison(s) exceeded |z| = {threshold}")

        except Exception as e:
            print(f"❌ Error in %shocks {argv[0]}: {e}")
            raise


def load_ipython_extension(ipython):
    """Load the extension"""
    ipython.register_magics(ShockMagics)


def unload_ipython_extension(ipython):
    """Unload the extension"""
    pass
