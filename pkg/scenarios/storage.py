"""Dataset container on disk.

Line 1 is a magic comment carrying the format version, line 2 a JSON header
(meta plus the active-set dictionary), and the rest a CSV table with one row
per sample::

    # activeset-dataset 1
    {"dictionary": {...}, "meta": {...}}
    index,label,cost,w_<bus id>...,p_<generator>...

Only load buses get a ``w_`` column, keyed by the external bus id. Floats are
written with ``repr`` so a load returns bit-identical values.
"""
import csv
import json
import logging
from pathlib import Path

import numpy as np

from .dataset import Dataset, DatasetMeta, LabeledSample
from .dictionary import ActiveSetDictionary
from .exceptions import DatasetFormatError

logger = logging.getLogger(__name__)

MAGIC = '# activeset-dataset'
FORMAT_VERSION = 1


def _columns(meta):
    omega_columns = [f"w_{meta.bus_ids[i]}" for i in meta.load_buses]
    power_columns = [f"p_{g}" for g in range(meta.n_gen)]
    return ['index', 'label', 'cost'] + omega_columns + power_columns


def save_dataset(ds, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = ds.meta
    loads = list(meta.load_buses)
    header = {'dictionary': ds.dictionary.to_dict(), 'meta': meta.to_dict()}

    with path.open('w', encoding='utf-8', newline='') as handle:
        handle.write(f"{MAGIC} {FORMAT_VERSION}\n")
        handle.write(json.dumps(header, sort_keys=True) + '\n')
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(_columns(meta))
        for sample in ds.samples:
            writer.writerow(
                [sample.index, sample.label, repr(float(sample.cost))]
                + [repr(float(v)) for v in sample.omega[loads]]
                + [repr(float(v)) for v in sample.p_star]
            )
    logger.info(f"Wrote {len(ds)} samples to {path}")
    return path


def load_dataset(path):
    path = Path(path)
    with path.open('r', encoding='utf-8', newline='') as handle:
        magic = handle.readline().strip()
        if not magic.startswith(MAGIC):
            raise DatasetFormatError(f"{path} is not a dataset file")
        version = magic[len(MAGIC):].strip()
        if version != str(FORMAT_VERSION):
            raise DatasetFormatError(f"{path} has dataset format {version!r}, expected {FORMAT_VERSION}")

        try:
            header = json.loads(handle.readline())
            meta = DatasetMeta.from_dict(header['meta'])
            dictionary = ActiveSetDictionary.from_dict(header['dictionary'])
        except (ValueError, KeyError, TypeError) as e:
            raise DatasetFormatError(f"{path} has an unreadable header: {e}") from e

        reader = csv.reader(handle)
        columns = next(reader, None)
        if columns != _columns(meta):
            raise DatasetFormatError(f"{path} has unexpected columns")

        loads = list(meta.load_buses)
        n_loads = len(loads)
        samples = []
        for line, row in enumerate(reader, start=4):
            if not row:
                continue
            try:
                values = [float(v) for v in row[3:]]
                omega = np.zeros(meta.n_bus)
                omega[loads] = values[:n_loads]
                p_star = np.array(values[n_loads:], dtype=float)
                sample = LabeledSample(
                    index=int(row[0]),
                    omega=omega,
                    label=int(row[1]),
                    p_star=p_star,
                    cost=float(row[2]),
                )
            except (ValueError, IndexError) as e:
                raise DatasetFormatError(f"{path} line {line}: {e}") from e
            if p_star.shape != (meta.n_gen,) or sample.label >= len(dictionary):
                raise DatasetFormatError(f"{path} line {line}: row does not match the header")
            samples.append(sample)

    logger.debug(f"Loaded {len(samples)} samples from {path}")
    return Dataset(samples=samples, dictionary=dictionary, meta=meta)
