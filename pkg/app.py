"""
Spatial Prediction Toolkit - command-line entry point

Kriging and thin-plate spline prediction on scattered planar observations,
with median-polish detrending and leave-one-out comparison of the two
predictors.

Usage:
    python app.py compare --input obs.csv --output report.yaml
    python app.py krige --input obs.csv --output grid.csv --grid 0,10,0,10,21,21
"""

import logging
import os
import sys

# Add repository root to Python path so ``src`` resolves when run as a script
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from src.cli.runner import main  # noqa: E402

# Logs go to stderr; data files are written by the commands
logging.basicConfig(
    level=logging.WARNING,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=[
        logging.StreamHandler(sys.stderr)
    ]
)


if __name__ == "__main__":
    sys.exit(main())
