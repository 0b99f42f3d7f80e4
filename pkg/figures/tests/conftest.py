import sys
from pathlib import Path

try:
    import tadlora_figures  # noqa: F401
except ImportError:
    sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))
