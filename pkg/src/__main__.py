"""Entry point for running the package as a module."""

from src.main import run

if __name__ == "__main__":
    run()
