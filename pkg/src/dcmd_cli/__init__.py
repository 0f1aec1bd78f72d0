"""dcmd command line.

Usage examples:

  uv run -m dcmd_cli simulate --preset baseline --grid 26x51 --out runs/baseline
  uv run -m dcmd_cli steady --inlet-f 60 --inlet-p 20 --out runs/steady
  uv run -m dcmd_cli verify --grid 5x9
  uv run -m dcmd_cli convergence --kind both --out runs/mms

Exit status is 0 on success, 1 for invalid input and 2 for numerical
failures or failed checks.
"""

__all__ = ["main"]
