import os
import tempfile
from typing import Union


def atomic_write(path: str, payload: Union[str, bytes]):
    """Write to a sibling temp file, then rename over ``path``.

    Readers see either the previous file or the complete new one.
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    data = payload.encode("utf-8") if isinstance(payload, str) else payload
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        try: os.remove(tmp)
        except OSError: pass
        raise


def check_writable(directory: str):
    """Raise OSError now rather than after a long computation."""
    os.makedirs(directory, exist_ok=True)
    fd, probe = tempfile.mkstemp(prefix=".probe-", dir=directory)
    os.close(fd)
    os.remove(probe)
