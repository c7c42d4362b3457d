import logging
import subprocess
from functools import lru_cache
from pathlib import Path

from activeset import __version__

logger = logging.getLogger(__name__)


@lru_cache(maxsize=1)
def describe_version() -> str:
    """git-describe style version, falling back to the package version"""
    repo_root = Path(__file__).resolve().parent.parent
    try:
        result = subprocess.run(
            ['git', 'describe', '--tags', '--always', '--dirty'],
            cwd=repo_root,
            capture_output=True,
            text=True,
            timeout=5,
        )
    except (OSError, subprocess.SubprocessError) as e:
        logger.debug(f"git describe unavailable: {e}")
        return __version__

    described = result.stdout.strip()
    if result.returncode != 0 or not described:
        return __version__
    return f"{__version__}+{described}"
