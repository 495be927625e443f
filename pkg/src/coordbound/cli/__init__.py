"""Command-line interface, evaluation, baselines and model bundles."""
