"""Test suite for the gpc posterior library."""
