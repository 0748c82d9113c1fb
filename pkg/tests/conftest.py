import sys
from pathlib import Path

# lets test modules share oracle helpers
sys.path.insert(0, str(Path(__file__).parent))
