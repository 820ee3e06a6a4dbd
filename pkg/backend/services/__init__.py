"""Cross-cutting services: stage error handling and timings."""
