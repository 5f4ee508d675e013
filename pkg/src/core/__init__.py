"""Shared interfaces, report models and the exception hierarchy."""
