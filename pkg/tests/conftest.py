import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent))

try:
    import nlsqlab  # noqa: F401
except ImportError:  # run from a checkout without installation
    sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))
