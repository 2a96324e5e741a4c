"""
Main entry point for the reflexcr command line
"""
from reflexcr.cli import cli

if __name__ == "__main__":
    cli()
