"""Orchestration: config, datasets, evaluation, study analytics, CLI, service."""
