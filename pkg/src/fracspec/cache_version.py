"""Cache format version; bump on any layout change."""

FORMAT_VERSION = 1
