"""
Shared helpers: deterministic seeding, number formatting and bounded thread pools.
"""
import concurrent.futures
import logging
import zlib

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_SEED = 42
SIGNIFICANT_DIGITS = 12


def _label_key(label):
    return zlib.crc32(label.encode("utf-8")) & 0xffffffff


def seed_sequence(root, label, index=0):
    """Return the SeedSequence for a (root seed, component label, index) triple.

    Arguments:

    root - the run's root seed
    label - component name, e.g. "gbm-bootstrap"
    index - task or path index within the component"""

    return np.random.SeedSequence(entropy=int(root), spawn_key=(_label_key(label), int(index)))


def derive_rng(root, label, index=0):
    return np.random.default_rng(seed_sequence(root, label, index))


def format_number(value, digits=SIGNIFICANT_DIGITS):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.*g" % (digits, value)
    return str(value)


def chunk_sizes(total, chunk):
    sizes = [chunk] * (total // chunk)
    if total % chunk:
        sizes.append(total % chunk)
    return sizes


def parallel_map(func, items, threads=1):
    """Map func over items, in order, on at most `threads` worker threads."""
    items = list(items)
    if threads is None or threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    logger.debug("Dispatching %d tasks to %d threads", len(items), threads)
    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(func, items))
