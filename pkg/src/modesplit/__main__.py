"""Module entry point: python -m modesplit."""

from .cli import main

if __name__ == "__main__":
    main()
