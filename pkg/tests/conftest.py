import sys
from pathlib import Path

# Test-suite-local helper modules (oracles, generators).
sys.path.insert(0, str(Path(__file__).parent))
