"""Entry point for `python -m dcmd_cli`."""

from .cli import main

if __name__ == "__main__":
    raise SystemExit(main())
