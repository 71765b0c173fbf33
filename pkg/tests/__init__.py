"""Tests for stable-clt-lab."""
