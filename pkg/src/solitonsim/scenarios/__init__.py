"""Bundled scenario files, loadable by name through the CLI."""
