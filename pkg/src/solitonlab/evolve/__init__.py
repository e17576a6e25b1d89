"""Split-step time evolution and conservation monitoring."""
