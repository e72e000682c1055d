"""
Tests for tempered-shocks
"""
