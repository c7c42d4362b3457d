import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from django.conf import settings

from core.exceptions import ConfigError
from core.rng import substream
from core.versioning import describe_version
from dcopf.services import TOL_ACTIVE, solve_dcopf

from .dataset import Dataset, DatasetMeta, LabeledSample
from .dictionary import UNSEEN_LABEL, ActiveSetDictionary
from .exceptions import AllSamplesInfeasible, EmptySplit
from .sampling import NormalSampler

logger = logging.getLogger(__name__)

DEFAULT_WINDOW = 1000
DEFAULT_MAX_SAMPLES = 50_000


@dataclass(frozen=True)
class DiscoveryResult:
    dictionary: ActiveSetDictionary
    discovery_curve: list
    n_samples: int
    n_infeasible: int
    stopped_early: bool

    @property
    def unseen_mass(self):
        return self.dictionary.unseen_mass()


def _default_threads():
    return max(1, int(settings.ACTIVESET.get('THREADS', 1)))


class ScenarioService:
    """Sampling forecast errors and labelling them with DC-OPF active sets"""

    @classmethod
    def draw(cls, model, seed, index, sampler=None):
        """The forecast error of sample ``index``; independent of any other draw"""
        return (sampler or NormalSampler()).sample(model, substream(seed, 'generate', index))

    @classmethod
    def _solve_draw(cls, poly, model, seed, index, sampler, tol_active):
        omega = cls.draw(model, seed, index, sampler)
        return omega, solve_dcopf(poly, omega, tol_active=tol_active)

    @classmethod
    def generate_dataset(cls, net, poly, model, n_samples, seed, threads=None, sampler=None,
                         tol_active=TOL_ACTIVE):
        if n_samples < 1:
            raise ConfigError(f"n_samples must be at least 1, got {n_samples}")
        sampler = sampler or NormalSampler()
        threads = threads or _default_threads()

        def solve(index):
            return cls._solve_draw(poly, model, seed, index, sampler, tol_active)

        logger.info(f"Generating {n_samples} samples for {net.case_name} on {threads} thread(s)")
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(solve, range(n_samples)))
        else:
            results = [solve(index) for index in range(n_samples)]

        # Single ordered reduction pass so labels never depend on scheduling
        dictionary = ActiveSetDictionary()
        samples = []
        n_infeasible = 0
        for index, (omega, point) in enumerate(results):
            if not point.is_optimal:
                n_infeasible += 1
                continue
            samples.append(LabeledSample(
                index=index,
                omega=omega,
                label=dictionary.add(point.active_set),
                p_star=point.p_star,
                cost=point.cost,
            ))

        if not samples:
            raise AllSamplesInfeasible(n_samples)
        if n_infeasible:
            logger.warning(f"Dropped {n_infeasible} of {n_samples} draws with an infeasible DC-OPF")

        meta = DatasetMeta(
            case_name=net.case_name,
            sigma_frac=model.sigma_frac,
            seed=int(seed),
            generator_version=describe_version(),
            bus_ids=net.external_bus_ids(),
            load_buses=model.load_buses,
            n_gen=net.n_gen,
            n_requested=n_samples,
            n_infeasible=n_infeasible,
            sampler=sampler.name,
            fingerprint=poly.fingerprint(),
        )
        logger.info(
            f"Dataset ready: {len(samples)} samples, {len(dictionary)} active sets, "
            f"{n_infeasible} infeasible draws"
        )
        return Dataset(samples=samples, dictionary=dictionary, meta=meta)

    @classmethod
    def discovery_run(cls, net, poly, model, seed, window=DEFAULT_WINDOW, max_samples=DEFAULT_MAX_SAMPLES,
                      sampler=None, tol_active=TOL_ACTIVE):
        """Sample until ``window`` consecutive draws add no new active set.

        The curve holds (sample number, dictionary size) at every discovery and
        at the last sample, with sample numbers counted from 1.
        """
        if window < 1:
            raise ConfigError(f"Discovery window must be at least 1, got {window}")
        sampler = sampler or NormalSampler()
        dictionary = ActiveSetDictionary()
        curve = []
        n_infeasible = 0
        since_discovery = 0
        drawn = 0

        for index in range(max_samples):
            drawn = index + 1
            _, point = cls._solve_draw(poly, model, seed, index, sampler, tol_active)
            if not point.is_optimal:
                n_infeasible += 1
                since_discovery += 1
            else:
                size = len(dictionary)
                dictionary.add(point.active_set)
                if len(dictionary) > size:
                    curve.append((drawn, len(dictionary)))
                    since_discovery = 0
                else:
                    since_discovery += 1
            if since_discovery >= window:
                break

        if not curve or curve[-1][0] != drawn:
            curve.append((drawn, len(dictionary)))

        stopped_early = since_discovery >= window
        logger.info(
            f"Discovery on {net.case_name} stopped after {drawn} samples with {len(dictionary)} "
            f"active sets (unseen mass {dictionary.unseen_mass():.3g})"
        )
        return DiscoveryResult(
            dictionary=dictionary,
            discovery_curve=curve,
            n_samples=drawn,
            n_infeasible=n_infeasible,
            stopped_early=stopped_early,
        )

    @classmethod
    def split_dataset(cls, ds, train_fraction, seed):
        if not 0 < train_fraction < 1:
            raise ConfigError(f"train_fraction must lie in (0, 1), got {train_fraction}")
        n = len(ds)
        n_train = int(round(train_fraction * n))
        if n_train == 0 or n_train == n:
            raise EmptySplit(n, train_fraction)

        order = substream(seed, 'split').permutation(n)
        train = sorted(int(i) for i in order[:n_train])
        test = sorted(int(i) for i in order[n_train:])
        return ds.subset(train), ds.subset(test)

    @classmethod
    def discovery_curve(cls, ds):
        """Discovery curve of a generated dataset, in the shape discovery_run reports.

        Labels are handed out in draw order, so a new label marks a discovery.
        """
        curve = []
        seen = 0
        for sample in ds.samples:
            if sample.label >= seen:
                seen = sample.label + 1
                curve.append((sample.index + 1, seen))
        drawn = max(ds.meta.n_requested, ds.samples[-1].index + 1 if ds.samples else 0)
        if not curve or curve[-1][0] != drawn:
            curve.append((drawn, seen))
        return curve

    @classmethod
    def relabel(cls, ds, dictionary):
        """Re-express a dataset's labels in another dictionary's label space"""
        samples = []
        unseen = 0
        for sample in ds.samples:
            if sample.label == UNSEEN_LABEL:
                label = UNSEEN_LABEL
            else:
                label = dictionary.label_of(ds.dictionary[sample.label])
            if label == UNSEEN_LABEL:
                unseen += 1
            samples.append(replace(sample, label=label))
        if unseen:
            logger.info(f"{unseen} of {len(samples)} samples have an active set outside the reference dictionary")
        return Dataset(samples=samples, dictionary=dictionary, meta=ds.meta)


def generate_dataset(net, poly, model, n_samples, seed, threads=None, sampler=None, tol_active=TOL_ACTIVE):
    return ScenarioService.generate_dataset(net, poly, model, n_samples, seed, threads, sampler, tol_active)


def discovery_run(net, poly, model, seed, window=DEFAULT_WINDOW, max_samples=DEFAULT_MAX_SAMPLES, sampler=None,
                  tol_active=TOL_ACTIVE):
    return ScenarioService.discovery_run(net, poly, model, seed, window, max_samples, sampler, tol_active)


def split_dataset(ds, train_fraction, seed):
    return ScenarioService.split_dataset(ds, train_fraction, seed)


def relabel(ds, dictionary):
    return ScenarioService.relabel(ds, dictionary)


def unseen_rate(ds):
    labels = ds.labels
    return float(np.mean(labels == UNSEEN_LABEL)) if labels.size else 0.0


def discovery_curve(ds):
    return ScenarioService.discovery_curve(ds)
