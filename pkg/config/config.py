import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

class Config:
    """Configuration settings for the stored vortex diffusion toolkit."""

    def __init__(self):
        # Paths
        self.OUTPUT_PATH = os.getenv("OUTPUT_PATH", "./data/output")
        self.SCENARIOS_PATH = os.getenv("SCENARIOS_PATH", "./scenarios")

        # Grid defaults (pitch is w0/16 at a 670 um waist)
        self.GRID_N = int(os.getenv("GRID_N", "256"))
        self.PITCH = float(os.getenv("PITCH", "4.1875e-5"))
        self.NBINS = int(os.getenv("NBINS", "64"))

        # Medium and beam defaults, SI units
        self.WAIST = float(os.getenv("WAIST", "670e-6"))
        self.DIFFUSION_COEFFICIENT = float(os.getenv("DIFFUSION_COEFFICIENT", "1.1e-3"))
        self.DECAY_RATE = float(os.getenv("DECAY_RATE", "20000"))
        self.COUPLING_RATIO = float(os.getenv("COUPLING_RATIO", "1.0"))
        self.SLOWING_DELAY = float(os.getenv("SLOWING_DELAY", "50e-6"))

        # Numerics
        self.WRAP_GUARD_FACTOR = float(os.getenv("WRAP_GUARD_FACTOR", "6.0"))
        self.FLOAT_FORMAT = os.getenv("FLOAT_FORMAT", "%.12g")

        # System Settings
        self.VERBOSE = os.getenv("VERBOSE", "true").lower() == "true"

    def ensure_directories(self):
        """Create necessary directories if they don't exist."""
        os.makedirs(self.OUTPUT_PATH, exist_ok=True)
