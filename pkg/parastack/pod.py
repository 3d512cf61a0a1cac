"""
The `POD` class gives a uniform access to the places where results are
written. The `from_uri` method instanciates a POD object based on a
uri. The supported schemes are `file://` and `memory://`; if no scheme
is given, the uri is interpreted as a local path.

``` python-console
>>> from parastack import POD
>>> pod = POD.from_uri('results')
>>> pod.ls()
['campaign', 'stack.json', 'spectrum.csv']
```

Every command of the cli writes its outputs through a POD, and
ensemble shards append their records to JSON-lines files.
"""
import shutil
from pathlib import Path, PurePosixPath
from threading import Lock
from urllib.parse import urlsplit

from .utils import logger

__all__ = ["POD", "FilePOD", "MemPOD"]


class POD:
    @classmethod
    def from_uri(cls, uri=None):
        parts = urlsplit(str(uri or ""))
        scheme, path = parts.scheme, parts.path
        if not scheme:
            if not path or path == ":memory:":
                scheme = "memory"
                path = "."
            else:
                scheme = "file"

        # urlsplit keep the separator in the path
        if parts.scheme and path.startswith("/") and scheme == "memory":
            path = path[1:]
        if scheme == "file":
            if parts.netloc:
                raise ValueError("Malformed uri, should start with 'file:///'")
            return FilePOD(Path(path).expanduser())
        elif scheme == "memory":
            return MemPOD(PurePosixPath(path or "."))
        else:
            raise ValueError(f'Protocol "{scheme}" not supported in "{uri}"')

    def read_text(self, relpath):
        return self.read(relpath).decode()

    def write_text(self, relpath, text, force=True):
        return self.write(relpath, text.encode(), force=force)

    def append_text(self, relpath, text):
        return self.append(relpath, text.encode())


class FilePOD(POD):

    protocol = "file"

    def __init__(self, path):
        self.path = Path(path)
        super().__init__()

    def cd(self, *others):
        return FilePOD(self.path.joinpath(*others))

    def ls(self, relpath=".", missing_ok=False):
        logger.debug("LIST %s %s", self.path, relpath)
        path = self.path / relpath
        try:
            return sorted(p.name for p in path.iterdir())
        except FileNotFoundError:
            if missing_ok:
                return []
            raise

    def read(self, relpath):
        logger.debug("READ %s %s", self.path, relpath)
        return (self.path / relpath).read_bytes()

    def write(self, relpath, data, force=False):
        if not force and self.isfile(relpath):
            logger.debug("SKIP-WRITE %s %s", self.path, relpath)
            return
        logger.debug("WRITE %s %s", self.path, relpath)
        path = self.path / relpath
        path.parent.mkdir(parents=True, exist_ok=True)
        return path.write_bytes(data)

    def append(self, relpath, data):
        logger.debug("APPEND %s %s", self.path, relpath)
        path = self.path / relpath
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("ab") as fh:
            return fh.write(data)

    def isdir(self, relpath):
        return self.path.joinpath(relpath).is_dir()

    def isfile(self, relpath):
        return self.path.joinpath(relpath).is_file()

    def rm(self, relpath=".", recursive=False, missing_ok=False):
        logger.debug("REMOVE %s %s", self.path, relpath)
        path = self.path / relpath
        try:
            if recursive and path.is_dir():
                shutil.rmtree(path)
            elif path.is_dir():
                path.rmdir()
            else:
                path.unlink()
        except FileNotFoundError:
            if missing_ok:
                return
            raise

    def __repr__(self):
        return f"<FilePOD {self.path}>"


class MemPOD(POD):
    """
    In-memory POD, all the instances created with `cd` share the
    same store (a dict keyed by path tuples).
    """

    protocol = "memory"

    def __init__(self, path, store=None):
        self.path = PurePosixPath(path)
        self.parts = tuple(p for p in self.path.parts if p != ".")
        self.store = {} if store is None else store
        self._lock = Lock()
        super().__init__()

    def cd(self, *others):
        return MemPOD(PurePosixPath(self.path, *others), store=self.store)

    @classmethod
    def split(cls, path):
        if not path:
            return tuple()
        if isinstance(path, PurePosixPath):
            path = str(path)
        return tuple(p for p in path.split("/") if p not in ("", "."))

    def _key(self, relpath):
        return self.parts + self.split(relpath)

    def isfile(self, relpath):
        return self._key(relpath) in self.store

    def isdir(self, relpath):
        key = self._key(relpath)
        return any(k[: len(key)] == key and len(k) > len(key) for k in self.store)

    def ls(self, relpath="", missing_ok=False):
        key = self._key(relpath)
        names = {k[len(key)] for k in self.store if k[: len(key)] == key and len(k) > len(key)}
        # The pod root always exists
        if not names and self.split(relpath) and not missing_ok:
            raise FileNotFoundError(f'Path "{"/".join(key)}" not found')
        return sorted(names)

    def read(self, relpath):
        logger.debug("READ memory://%s %s", "/".join(self.parts), relpath)
        try:
            return self.store[self._key(relpath)]
        except KeyError:
            raise FileNotFoundError(f'Path "{relpath}" not found')

    def write(self, relpath, data, force=False):
        key = self._key(relpath)
        if not force and key in self.store:
            logger.debug("SKIP-WRITE memory://%s %s", "/".join(self.parts), relpath)
            return
        logger.debug("WRITE memory://%s %s", "/".join(self.parts), relpath)
        self.store[key] = bytes(data)
        return len(data)

    def append(self, relpath, data):
        logger.debug("APPEND memory://%s %s", "/".join(self.parts), relpath)
        key = self._key(relpath)
        with self._lock:
            self.store[key] = self.store.get(key, b"") + bytes(data)
        return len(data)

    def rm(self, relpath=".", recursive=False, missing_ok=False):
        key = self._key(relpath)
        if key in self.store:
            del self.store[key]
            return
        children = [k for k in self.store if k[: len(key)] == key]
        if children:
            if not recursive:
                raise OSError(f"{relpath} is not empty")
            for k in children:
                del self.store[k]
        elif not missing_ok:
            raise FileNotFoundError(f"{relpath} not found")

    def __repr__(self):
        return f"<MemPOD {self.path}>"
