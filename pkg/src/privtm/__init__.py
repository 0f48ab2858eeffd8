"""Privatization-safe transactional memory laboratory."""
