#!/usr/bin/env python3
"""
CAT startup script
Checks the environment (.env, MNIST paths, output directory) before handing
over to the command-line runner
"""

import os
import sys
import logging
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

MNIST_VARS = [
    "CAT_MNIST_TRAIN_IMAGES",
    "CAT_MNIST_TRAIN_LABELS",
    "CAT_MNIST_TEST_IMAGES",
    "CAT_MNIST_TEST_LABELS",
]


def check_environment():
    """Report which MNIST files are configured and whether they exist"""
    configured = {var: os.getenv(var) for var in MNIST_VARS if os.getenv(var)}
    if not configured:
        logger.info("⚠️ No MNIST paths configured - only the blobs dataset is available without flags")
        return True

    missing = [f"{var}={path}" for var, path in configured.items() if not Path(path).exists()]
    if missing:
        logger.error(f"❌ Configured MNIST files not found: {missing}")
        return False

    logger.info(f"✅ MNIST files found: {len(configured)}")
    return True


def check_output_dir():
    """Make sure the output directory is writable"""
    out = Path(os.getenv("CAT_OUTPUT_DIR", "runs"))
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_test"
        probe.write_text("ok")
        probe.unlink()
    except OSError as e:
        logger.error(f"❌ Output directory {out} is not writable: {e}")
        return False
    logger.info(f"✅ Output directory: {out}")
    return True


def main():
    """Main startup function"""
    logger.info("🌱 CAT - Starting Up...")

    if not check_environment() or not check_output_dir():
        logger.error("❌ Environment check failed")
        sys.exit(2)

    from main import main as run_cli
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
