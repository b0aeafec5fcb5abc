#!/usr/bin/env python
"""
Main entry point for the drift-Strichartz toolkit.
"""

import os
import sys
import logging
from dotenv import load_dotenv

from drift_strichartz.cli import main

# Load environment variables
load_dotenv()

# Configure logging; stdout carries the JSON/CSV payloads
handlers = [logging.StreamHandler(sys.stderr)]
if os.getenv("DRIFT_LOG_FILE"):
    handlers.append(logging.FileHandler(os.getenv("DRIFT_LOG_FILE")))
logging.basicConfig(
    level=os.getenv("DRIFT_LOG_LEVEL", "INFO").upper(),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=handlers
)

if __name__ == "__main__":
    sys.exit(main())
