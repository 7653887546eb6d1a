"""Test suite for the sideband phonon lab."""
