import hashlib
import json

import numpy as np

from dcopf.services import ActiveSet

# Label given to an active set that a reference dictionary has never seen
UNSEEN_LABEL = -1


class ActiveSetDictionary:
    """The distinct active sets of a run, indexed in order of first discovery"""

    def __init__(self, sets=(), counts=None):
        self.sets = []
        self.counts = []
        self._labels = {}
        counts = list(counts) if counts is not None else [0] * len(sets)
        for aset, count in zip(sets, counts):
            label = self._register(aset)
            self.counts[label] = int(count)

    def _register(self, aset):
        if aset.rows in self._labels:
            raise ValueError(f"Duplicate active set {aset.to_list()}")
        label = len(self.sets)
        self.sets.append(aset)
        self.counts.append(0)
        self._labels[aset.rows] = label
        return label

    def __len__(self):
        return len(self.sets)

    def __getitem__(self, label):
        if not 0 <= label < len(self.sets):
            raise IndexError(f"No active set with label {label}")
        return self.sets[label]

    def __iter__(self):
        return iter(self.sets)

    @property
    def total_samples(self):
        return sum(self.counts)

    def add(self, aset):
        """Record one observation and return its label"""
        label = self._labels.get(aset.rows)
        if label is None:
            label = self._register(aset)
        self.counts[label] += 1
        return label

    def label_of(self, aset):
        return self._labels.get(aset.rows, UNSEEN_LABEL)

    def frequencies(self):
        total = self.total_samples
        counts = np.asarray(self.counts, dtype=float)
        return counts / total if total else counts

    def singletons(self):
        return sum(1 for count in self.counts if count == 1)

    def unseen_mass(self):
        """Good-Turing estimate of the probability of a not-yet-seen active set"""
        total = self.total_samples
        return self.singletons() / total if total else 1.0

    def digest(self):
        """Identity of the label space: the ordered sets, not their counts"""
        payload = json.dumps([aset.to_list() for aset in self.sets], separators=(',', ':'))
        return hashlib.sha256(payload.encode()).hexdigest()

    def to_dict(self):
        return {
            'sets': [aset.to_list() for aset in self.sets],
            'counts': list(self.counts),
            'total_samples': self.total_samples,
        }

    @classmethod
    def from_dict(cls, data):
        sets = [ActiveSet(tuple(rows)) for rows in data['sets']]
        return cls(sets, data.get('counts'))

    def __repr__(self):
        return f"<ActiveSetDictionary {len(self)} sets / {self.total_samples} samples>"
