import bisect
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass
from hashlib import sha1
from itertools import islice
from threading import Lock
from time import perf_counter

from numpy import asarray, full

default_hash = sha1
head = lambda it, n=1: list(islice(it, 0, n))

# Vacuum speed of light in micrometers per femtosecond
C_UM_FS = 0.299792458
HBAR_EV_FS = 0.6582119569
HBAR_SI = 1.054571817e-34
EPS0_SI = 8.8541878128e-12
C_SI = 299792458.0

fmt = "%(levelname)s:%(asctime).19s: %(message)s"
logging.basicConfig(format=fmt)
logger = logging.getLogger("parastack")


# Global settings
@dataclass
class Settings:
    threaded: bool = True
    debug: bool = False
    max_threads: int = 8  # Size of the threadpool
    chunk_size: int = 65_536  # Grid points per worker task
    float_digits: int = 12
    bootstrap_samples: int = 200
    peak_refine_max_iter: int = 14


settings = Settings()


class ParastackError(Exception):
    pass


class ValidationError(ParastackError, ValueError):
    pass


class DomainError(ParastackError, ValueError):
    pass


class NumericalError(ParastackError, ArithmeticError):
    pass


def chunky(collection, size=100):
    it = iter(collection)
    while True:
        chunk = head(it, size)
        if not chunk:
            break
        yield chunk


def hexdigest(*data):
    digest = default_hash()
    for datum in data:
        if isinstance(datum, str):
            datum = datum.encode()
        digest.update(datum)
    return digest.hexdigest()


MASK64 = (1 << 64) - 1


def splitmix64(value):
    """
    One SplitMix64 output step, used to derive independent 64-bit
    seeds without coordination between workers.
    """
    z = (value + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed, index):
    """
    Seed of structure `index` in a campaign:

    >>> derive_seed(7, 0) == derive_seed(7, 0)
    True
    """
    return splitmix64(splitmix64(master_seed & MASK64) ^ (index & MASK64))


def fmt_float(value, digits=None):
    "Byte-stable float formatting: `digits` significant digits, uppercase E"
    digits = digits or settings.float_digits
    return f"{value:.{digits - 1}E}"


def round_sig(value, digits=None):
    "Round to `digits` significant digits (used for JSON numbers)"
    digits = digits or settings.float_digits
    return float(f"{value:.{digits}g}")


def trapezoid_weights(axis):
    """
    Trapezoidal quadrature weights of a uniform 1D grid
    """
    axis = asarray(axis, dtype=float)
    if len(axis) < 2:
        return full(len(axis), 1.0)
    step = axis[1] - axis[0]
    weights = full(len(axis), step)
    weights[0] = weights[-1] = step / 2
    return weights


def wavelength_to_omega(lambda_um):
    "Vacuum wavelength (μm) to angular frequency (rad/fs)"
    return 2 * math.pi * C_UM_FS / lambda_um


def omega_to_wavelength(omega):
    "Angular frequency (rad/fs) to vacuum wavelength (μm)"
    return 2 * math.pi * C_UM_FS / omega


def pretty_nb(number):
    prefixes = "yzafpnum_kMGTPEZY"
    factors = [1000 ** i for i in range(-8, 8)]
    if number == 0:
        return 0
    if number < 0:
        return "-" + pretty_nb(-number)
    idx = bisect.bisect_right(factors, number) - 1
    prefix = prefixes[idx]
    return "%.2f%s" % (number / factors[idx], "" if prefix == "_" else prefix)


@contextmanager
def timeit(title=""):
    start = perf_counter()
    yield
    delta = perf_counter() - start
    print(title, pretty_nb(delta) + "s", file=sys.stderr)


class Pool:
    """
    Threadpoolexecutor wrapper to simplify its usage. Results are
    kept in submission order, whatever the completion order. The
    shared executor is resized to `max_threads` (default
    `settings.max_threads`) when needed.
    """

    _lock = Lock()
    _pool = None
    _size = 0

    def __init__(self, max_threads=None):
        self.threaded = False
        self.futures = []
        self.results = []
        self.max_threads = max_threads or settings.max_threads

    def __enter__(self):
        if not settings.threaded or self.max_threads < 2:
            return self
        # Get lock and update self.threaded, nested pools run sequentially
        locked = Pool._lock.acquire(blocking=False)
        self.threaded = locked
        if locked and Pool._size != self.max_threads:
            # Only the lock holder submits to the shared executor
            if Pool._pool is not None:
                Pool._pool.shutdown()
            Pool._pool = ThreadPoolExecutor(self.max_threads)
            Pool._size = self.max_threads
        return self

    def submit(self, fn, *a, **kw):
        if self.threaded:
            self.futures.append(Pool._pool.submit(fn, *a, **kw))
        else:
            self.results.append(fn(*a, **kw))

    def __exit__(self, type, value, traceback):
        try:
            if self.threaded:
                self.results = [fut.result() for fut in self.futures]
        finally:
            # Release lock
            if self.threaded:
                Pool._lock.release()
                self.threaded = False
