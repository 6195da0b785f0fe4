"""Helpers shared by services and commands: seeding, batching, formatting, charts."""
