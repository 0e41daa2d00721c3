"""Tests for the uncertain_clt package."""
