"""BLV test suite."""
