"""
Harness Module for the KdV small-dispersion study.

Provides the analysis pipeline comparing numerical KdV solutions with the
asymptotic formulas, including:
- Regions of the x-axis attached to the zone edges or the catastrophe
- Pointwise error fields and their L-infinity norms
- Log-log scaling fits of errors against epsilon
- Matching zones between two neighbouring approximations
- Study presets, JSON reports and the end-to-end pipeline
"""

import json
import math
import os
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy import stats
from scipy.ndimage import maximum_filter1d
from scipy.signal import argrelmax

from modules import asymptotics
from modules.base_operations import run_bulk, validate_epsilon
from modules.hopf import critical_point, sech2_profile
from modules.kdv_spectral import GridField, KdvRunConfig, make_field, solve_kdv
from utils import csv_handler, run_cache
from utils.config import resolution_for
from utils.errors import DomainError, PipelineError, KdVStudyError
from utils.logger import log_error, log_info, operation_timer


REGION_KINDS = ('interior', 'leading', 'trailing', 'breakup', 'whole')

FORMULAS = (
    'hopf', 'onephase', 'leading', 'trailing', 'catastrophe2', 'catastrophe4',
    'conn-algebraic', 'conn-elliptic', 'conn-pii', 'conn-soliton',
)

DEFAULT_BREAKUP_DELTA = 5.0
MATCH_DELTA = 4.0
MIN_FIT_POINTS = 3

# region used when a config names a formula without one
DEFAULT_REGIONS = {
    'onephase': 'interior',
    'leading': 'leading',
    'trailing': 'trailing',
    'catastrophe2': 'breakup',
    'catastrophe4': 'breakup',
    'conn-algebraic': 'whole',
    'conn-elliptic': 'interior',
    'conn-pii': 'leading',
    'conn-soliton': 'trailing',
}


@dataclass
class Region:
    """
    Interval [x_a, x_b] of the x-axis.

    Attributes:
        kind (str): interior, leading, trailing, breakup or whole
        x_a, x_b (float): Bounds, x_a < x_b
    """
    kind: str
    x_a: float
    x_b: float

    def __post_init__(self):
        if self.kind not in REGION_KINDS:
            raise DomainError(f"Unknown region kind '{self.kind}'")
        if not self.x_a < self.x_b:
            raise DomainError(f"Region bounds must satisfy x_a < x_b, got [{self.x_a}, {self.x_b}]")

    def mask(self, x):
        x = np.asarray(x, dtype=float)
        return (x >= self.x_a) & (x <= self.x_b)


@dataclass
class ErrorField:
    """Pointwise |difference| on the grid nodes of a region."""
    region: Region
    x: np.ndarray
    values: np.ndarray

    @property
    def linf(self):
        return float(np.max(self.values))


@dataclass
class ScalingReport:
    """
    Fit ln delta = a ln eps + b.

    Attributes:
        region (str): Region label
        formula (str): Approximation label
        epsilons, deltas (list): Data
        a, b (float): Slope and intercept (None on unfitted rows)
        r (float): Correlation coefficient
        sigma_a (float): Standard deviation of the slope
    """
    region: str
    epsilons: list
    deltas: list
    a: float
    b: float
    r: float
    sigma_a: float
    formula: str = ''

    def to_dict(self):
        return asdict(self)

    @classmethod
    def unfitted(cls, epsilons, deltas, region='', formula=''):
        """Row for a sweep too short to fit; a, b, r and sigma_a are None."""
        return cls(region=region, formula=formula, epsilons=[float(e) for e in epsilons],
                   deltas=[float(d) for d in deltas], a=None, b=None, r=None, sigma_a=None)


@dataclass
class MatchReport:
    """
    Matching points of two approximations around an edge.

    Attributes:
        t, epsilon (float): Time and dispersion parameter
        edge_kind (str): leading, trailing or breakup
        edge_x (float): Edge position
        bounds (tuple): (left, right) matching points; None when the
            envelopes never come close on that side
        errors (tuple): Envelope error at the matching points
        crossed (tuple): Whether the envelopes actually intersect on each side
        dominance_ok (bool): A beats B inside the bounds and B beats A outside
    """
    t: float
    epsilon: float
    edge_kind: str
    edge_x: float
    bounds: tuple
    errors: tuple
    crossed: tuple
    dominance_ok: bool

    def to_dict(self):
        return asdict(self)


@dataclass
class StudyContext:
    """Data shared by all evaluators at one time t."""
    t: float
    profile: object
    cp: object
    edges: tuple = None
    zone: object = None
    extra: dict = field(default_factory=dict)


STUDIES = {
    'prebreakup': {
        't': 0.05,
        'comparisons': [('hopf', 'whole', 1.0)],
        'matches': [],
    },
    'breakup': {
        't': 'tc',
        'comparisons': [('hopf', 'whole', 1.0),
                        ('catastrophe2', 'breakup', DEFAULT_BREAKUP_DELTA),
                        ('catastrophe4', 'breakup', DEFAULT_BREAKUP_DELTA)],
        'matches': [('catastrophe2', 'hopf', 'breakup', DEFAULT_BREAKUP_DELTA),
                    ('catastrophe4', 'hopf', 'breakup', DEFAULT_BREAKUP_DELTA)],
    },
    'interior': {
        't': 0.4,
        'comparisons': [('onephase', 'interior', 1.0)],
        'matches': [],
    },
    'leading': {
        't': 0.4,
        'comparisons': [('leading', 'leading', 1.0), ('onephase', 'leading', 1.0)],
        'matches': [('leading', 'onephase', 'leading', MATCH_DELTA)],
    },
    'trailing': {
        't': 0.4,
        'comparisons': [('trailing', 'trailing', 1.0), ('onephase', 'trailing', 1.0),
                        ('hopf', 'trailing', 1.0)],
        'matches': [('trailing', 'onephase', 'trailing', MATCH_DELTA)],
    },
    'threeway': {
        't': 0.23,
        'comparisons': [('onephase', 'breakup', DEFAULT_BREAKUP_DELTA),
                        ('leading', 'leading', 1.0),
                        ('trailing', 'trailing', 1.0),
                        ('catastrophe2', 'breakup', DEFAULT_BREAKUP_DELTA)],
        'matches': [],
    },
}


# --- Regions and errors --------------------------------------------------

def make_region(kind, t, epsilon, edges=None, cp=None, delta=1.0, L=5.0 * math.pi):
    """
    Build a region.

    interior: half the zone length, centred on the zone
    leading:  [x- - delta eps^(2/3), x- + delta eps^(2/3)]
    trailing: [x+ + delta eps ln eps, x+ - delta eps ln eps]
    breakup:  xc + 6 uc (t - tc) +- delta eps^(6/7)
    whole:    [-L, L]

    Raises:
        DomainError: If the data needed for the kind is missing
    """
    epsilon = validate_epsilon(epsilon)
    if kind == 'whole':
        return Region('whole', -L, L)
    if kind == 'breakup':
        if cp is None:
            raise DomainError("Breakup region needs the catastrophe point")
        centre = cp.xc + 6.0 * cp.uc * (t - cp.tc)
        width = delta * epsilon ** (6.0 / 7.0)
        return Region('breakup', centre - width, centre + width)
    if edges is None:
        raise DomainError(f"Region '{kind}' needs the zone edges")
    leading, trailing = edges
    if kind == 'interior':
        centre = 0.5 * (leading.x_edge + trailing.x_edge)
        quarter = 0.25 * (trailing.x_edge - leading.x_edge)
        return Region('interior', centre - quarter, centre + quarter)
    if kind == 'leading':
        width = delta * epsilon ** (2.0 / 3.0)
        return Region('leading', leading.x_edge - width, leading.x_edge + width)
    if kind == 'trailing':
        width = delta * epsilon * math.log(epsilon)
        return Region('trailing', trailing.x_edge + width, trailing.x_edge - width)
    raise DomainError(f"Unknown region kind '{kind}'")


def error_field(u_num, approx, region):
    """
    |u_num - approx| on the grid nodes inside a region.

    Args:
        u_num (GridField): Numerical solution
        approx (GridField or callable): Second field, or x -> values
        region (Region): Where to sample

    Returns:
        ErrorField

    Raises:
        DomainError: For an empty region or one leaving the grid
    """
    x = u_num.x
    if region.x_a < x[0] - u_num.dx or region.x_b > u_num.L:
        raise DomainError(f"Region [{region.x_a}, {region.x_b}] leaves the grid [-{u_num.L}, {u_num.L})")
    mask = region.mask(x)
    if not np.any(mask):
        raise DomainError(f"Region [{region.x_a}, {region.x_b}] contains no grid nodes")
    if isinstance(approx, GridField):
        if approx.N != u_num.N or approx.L != u_num.L:
            raise DomainError("Fields live on different grids")
        other = approx.u[mask]
    else:
        other = np.asarray(approx(x[mask]), dtype=float)
    return ErrorField(region=region, x=x[mask], values=np.abs(u_num.u[mask] - other))


def scaling_fit(epsilons, deltas, region='', formula=''):
    """
    Least-squares fit of ln delta = a ln eps + b.

    Args:
        epsilons, deltas (sequence): At least three positive values each

    Returns:
        ScalingReport

    Raises:
        DomainError: For fewer than three points, non-positive data or
            zero variance in ln eps
    """
    eps = np.asarray(epsilons, dtype=float)
    dl = np.asarray(deltas, dtype=float)
    if eps.size != dl.size:
        raise DomainError("epsilons and deltas differ in length")
    if eps.size < 3:
        raise DomainError(f"Scaling fit needs at least 3 points, got {eps.size}")
    if np.any(eps <= 0) or np.any(dl <= 0):
        raise DomainError("Scaling fit needs positive data")
    lx, ly = np.log(eps), np.log(dl)
    if np.ptp(lx) == 0.0:
        raise DomainError("Scaling fit needs distinct epsilons")
    fit = stats.linregress(lx, ly)
    r = float(fit.rvalue) if np.ptp(ly) > 0.0 else 0.0
    return ScalingReport(region=region, formula=formula, epsilons=eps.tolist(), deltas=dl.tolist(),
                         a=float(fit.slope), b=float(fit.intercept), r=r, sigma_a=float(fit.stderr))


def envelope(values):
    """
    Windowed running maximum of an oscillating error.

    The window spans three oscillation periods, estimated from the median
    spacing of the local maxima.
    """
    values = np.asarray(values, dtype=float)
    peaks = argrelmax(values)[0]
    spacing = int(np.median(np.diff(peaks))) if peaks.size > 2 else 1
    size = max(3, 3 * spacing)
    return maximum_filter1d(values, size=size, mode='nearest')


def _crossing(x, diff, idx):
    i0, i1 = idx, idx + 1
    w = diff[i0] / (diff[i0] - diff[i1])
    return float(x[i0] + w * (x[i1] - x[i0])), w


def matching_zone(x, err_a, err_b, edge_x, t=0.0, epsilon=0.0, edge_kind=''):
    """
    Matching points of approximation A (valid at the edge) and B.

    Both errors are enveloped; on each side of the edge the crossing of
    the envelopes nearest to the edge is taken, or the point of closest
    approach when they do not cross.

    Args:
        x (ndarray): Sorted sample points spanning the edge
        err_a, err_b (ndarray): Errors of A and B at x
        edge_x (float): Edge position

    Returns:
        MatchReport
    """
    x = np.asarray(x, dtype=float)
    if x.size < 4 or not (x[0] < edge_x < x[-1]):
        raise DomainError("Matching needs samples on both sides of the edge")
    env_a, env_b = envelope(err_a), envelope(err_b)
    diff = env_a - env_b
    change = np.nonzero(np.sign(diff[:-1]) * np.sign(diff[1:]) < 0)[0]

    bounds, errors, crossed = [], [], []
    for side in ('left', 'right'):
        if side == 'left':
            cand = change[x[change + 1] <= edge_x]
            pick = cand.max() if cand.size else None
            region = x < edge_x
        else:
            cand = change[x[change] >= edge_x]
            pick = cand.min() if cand.size else None
            region = x > edge_x
        if pick is not None:
            xm, w = _crossing(x, diff, pick)
            bounds.append(xm)
            errors.append(float(env_a[pick] + w * (env_a[pick + 1] - env_a[pick])))
            crossed.append(True)
        elif np.any(region):
            j = np.nonzero(region)[0][np.argmin(np.abs(diff[region]))]
            bounds.append(float(x[j]))
            errors.append(float(env_a[j]))
            crossed.append(False)
        else:
            bounds.append(None)
            errors.append(None)
            crossed.append(False)

    dominance_ok = False
    if all(crossed):
        inside = (x > bounds[0]) & (x < bounds[1])
        outside = (x < bounds[0]) | (x > bounds[1])
        dominance_ok = bool(np.any(inside) and np.any(outside)
                            and np.median(diff[inside]) < 0 < np.median(diff[outside]))
    if not all(crossed):
        log_info("Matching Zone", f"No envelope crossing on {'both sides' if not any(crossed) else 'one side'} of x={edge_x:.6g}")
    return MatchReport(t=t, epsilon=epsilon, edge_kind=edge_kind, edge_x=float(edge_x),
                       bounds=tuple(bounds), errors=tuple(errors), crossed=tuple(crossed),
                       dominance_ok=dominance_ok)


# --- Evaluators ----------------------------------------------------------

def study_time(spec_t, cp):
    """Resolve a preset time ('tc' or a float)."""
    return cp.tc if spec_t == 'tc' else float(spec_t)


def build_context(t, profile=None, nc=64, need_zone=True):
    """
    Edges, zone and catastrophe data at time t, from the session cache.
    """
    profile = profile or sech2_profile()
    cp = critical_point(profile)
    ctx = StudyContext(t=t, profile=profile, cp=cp)
    if t > cp.tc:
        ctx.edges = run_cache.fetch_edges(t, profile)
        if need_zone:
            ctx.zone = run_cache.fetch_zone(t, profile, Nc=nc)
    return ctx


def _composite_onephase(ctx, epsilon):
    leading, trailing = ctx.edges

    def evaluate(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.asarray(asymptotics.hopf_approx(x, ctx.t, ctx.profile, ctx.edges), dtype=float).reshape(x.shape)
        inside = (x > leading.x_edge) & (x < trailing.x_edge)
        if np.any(inside):
            out[inside] = asymptotics.one_phase_approx(x[inside], ctx.t, epsilon, ctx.zone, ctx.profile)
        return out
    return evaluate


def build_evaluator(formula, ctx, epsilon):
    """
    x -> approximation for one formula at (ctx.t, epsilon).

    'onephase' is the Hopf solution outside the zone joined with the
    one-phase solution inside it.

    Raises:
        DomainError: For an unknown formula or one not defined at ctx.t
    """
    t, profile, cp = ctx.t, ctx.profile, ctx.cp
    after = t > cp.tc
    if formula == 'hopf':
        return lambda x: asymptotics.hopf_approx(x, t, profile, ctx.edges if after else None)
    if formula in ('onephase', 'leading', 'trailing', 'conn-elliptic', 'conn-pii', 'conn-soliton') and not after:
        raise DomainError(f"Formula '{formula}' needs t > tc")
    if formula == 'onephase':
        if ctx.zone is None:
            raise DomainError("One-phase formula needs the Whitham zone")
        return _composite_onephase(ctx, epsilon)
    if formula == 'leading':
        hm = run_cache.fetch_hastings_mcleod()
        return lambda x: asymptotics.leading_edge_approx(x, t, epsilon, ctx.edges[0], hm, profile)
    if formula == 'trailing':
        return lambda x: asymptotics.trailing_edge_approx(x, t, epsilon, ctx.edges[1])
    if formula in ('catastrophe2', 'catastrophe4'):
        order = 2 if formula == 'catastrophe2' else 4
        return lambda x: asymptotics.catastrophe_approx(x, t, epsilon, cp, run_cache.fetch_pi2,
                                                        order=order, profile=profile)
    if formula == 'conn-algebraic':
        return lambda x: asymptotics.connection_algebraic(x, t, cp)
    if formula == 'conn-elliptic':
        return lambda x: asymptotics.connection_elliptic(x, t, epsilon, cp)
    if formula == 'conn-pii':
        hm = run_cache.fetch_hastings_mcleod()
        return lambda x: asymptotics.connection_pii(x, t, epsilon, cp, hm)
    if formula == 'conn-soliton':
        return lambda x: asymptotics.connection_soliton(x, t, epsilon, cp)
    raise DomainError(f"Unknown formula '{formula}'")


def region_for(kind, ctx, epsilon, delta=1.0, L=5.0 * math.pi):
    return make_region(kind, ctx.t, epsilon, edges=ctx.edges, cp=ctx.cp, delta=delta, L=L)


def edge_position(kind, ctx):
    if kind == 'leading':
        return ctx.edges[0].x_edge
    if kind == 'trailing':
        return ctx.edges[1].x_edge
    return ctx.cp.xc + 6.0 * ctx.cp.uc * (ctx.t - ctx.cp.tc)


# --- Numerical runs ------------------------------------------------------

def run_kdv(epsilon, t, profile=None, N=None, Nt=None, L=5.0 * math.pi, dealias=False, extended=False):
    """
    Solve KdV from the profile's initial data up to time t.

    Returns:
        KdvRun
    """
    profile = profile or sech2_profile()
    N_def, Nt_def = resolution_for(epsilon, extended)
    cfg = KdvRunConfig(epsilon=epsilon, tmax=t, Nt=Nt or Nt_def, N=N or N_def, L=L,
                       snapshot_times=(t,), dealias=dealias)
    u0 = make_field(profile.u0, L=L, N=cfg.N)
    with operation_timer("Harness", f"KdV run eps={epsilon:.6g} t={t:.6g} N={cfg.N} Nt={cfg.Nt}"):
        return solve_kdv(u0, cfg)


def compare(field_num, epsilon, formula, region_kind, ctx, delta=1.0):
    """Error field of one formula on one region for a numerical snapshot."""
    region = region_for(region_kind, ctx, epsilon, delta, L=field_num.L)
    return error_field(field_num, build_evaluator(formula, ctx, epsilon), region)


# --- Studies -------------------------------------------------------------

def _keep_artifact(result, path, artifacts):
    ok, error = result
    if not ok:
        raise PipelineError(error, stage='artifacts')
    artifacts.append(path)


def _study_item(epsilon, study, ctx, settings, artifacts, out_dir):
    run = run_kdv(epsilon, ctx.t, ctx.profile, N=settings.get('nmodes'), Nt=settings.get('nsteps'),
                  L=settings.get('L', 5.0 * math.pi), dealias=settings.get('dealias', False),
                  extended=settings.get('extended', False))
    field_num = run.snapshot_at(ctx.t)
    if out_dir:
        path = os.path.join(out_dir, f"snapshot_eps{epsilon:.6g}.csv")
        _keep_artifact(csv_handler.write_snapshot(path, field_num, epsilon), path, artifacts)

    deltas = {}
    for formula, region_kind, delta in study['comparisons']:
        err = compare(field_num, epsilon, formula, region_kind, ctx, delta)
        deltas[(formula, region_kind)] = err.linf
        if out_dir:
            path = os.path.join(out_dir, f"error_{formula}_{region_kind}_eps{epsilon:.6g}.csv")
            meta = {'formula': formula, 'region': region_kind, 't': float(ctx.t), 'epsilon': float(epsilon)}
            _keep_artifact(csv_handler.write_table(path, 'error', meta, [err.x, err.values]), path, artifacts)

    matches = []
    for formula_a, formula_b, region_kind, delta in study['matches']:
        err_a = compare(field_num, epsilon, formula_a, region_kind, ctx, delta)
        err_b = compare(field_num, epsilon, formula_b, region_kind, ctx, delta)
        matches.append(((formula_a, formula_b), matching_zone(
            err_a.x, err_a.values, err_b.values, edge_position(region_kind, ctx),
            t=ctx.t, epsilon=epsilon, edge_kind=region_kind)))
    return (True, {'deltas': deltas, 'matches': matches, 'deltaE': run.energy.deltaE})


def study_comparisons(name, settings, t, cp):
    """
    Comparisons and matches of a study, with config overrides applied.

    'formulas' replaces the preset comparisons. 'regions' gives one region
    for all formulas or one per formula; without it each formula gets its
    usual region (Hopf: whole line up to tc, trailing window after).
    Preset matches are kept when both of their comparisons remain.

    Returns:
        tuple: (comparisons, matches) as lists of tuples

    Raises:
        DomainError: For an unknown study, formula or region, or a region
            list whose length fits neither rule
    """
    if name not in STUDIES:
        raise DomainError(f"Unknown study '{name}'; choose from {', '.join(STUDIES)}")
    study = STUDIES[name]
    formulas = list(settings.get('formulas') or [])
    if not formulas:
        return list(study['comparisons']), list(study['matches'])

    regions = list(settings.get('regions') or [])
    if len(regions) not in (0, 1, len(formulas)):
        raise DomainError(f"{len(regions)} regions given for {len(formulas)} formulas; "
                          f"give one region or one per formula")
    comparisons = []
    for i, formula in enumerate(formulas):
        if formula not in FORMULAS:
            raise DomainError(f"Unknown formula '{formula}'")
        if regions:
            region_kind = regions[0] if len(regions) == 1 else regions[i]
        elif formula == 'hopf':
            region_kind = 'whole' if t <= cp.tc else 'trailing'
        else:
            region_kind = DEFAULT_REGIONS[formula]
        if region_kind not in REGION_KINDS:
            raise DomainError(f"Unknown region kind '{region_kind}'")
        delta = DEFAULT_BREAKUP_DELTA if region_kind == 'breakup' else 1.0
        comparisons.append((formula, region_kind, delta))

    pairs = {(f, r) for f, r, _ in comparisons}
    matches = [m for m in study['matches'] if (m[0], m[2]) in pairs and (m[1], m[2]) in pairs]
    return comparisons, matches


def run_study(name, epsilons, settings=None, out_dir=None, progress=None, artifacts=None):
    """
    Run a study preset over a set of epsilons.

    A sweep of fewer than three epsilons gives one unfitted row per
    comparison. A longer sweep that keeps fewer than three successful runs
    cannot be fitted and fails in stage 'fit'.

    Args:
        name (str): Key of STUDIES
        epsilons (sequence): Dispersion parameters
        settings (dict, optional): Config settings (nmodes, nsteps, L, nc,
            formulas, regions, ...)
        out_dir (str, optional): Where CSV artifacts are written
        progress (callable, optional): Receives progress dicts
        artifacts (list, optional): Collects written file paths

    Returns:
        dict: 'reports' (list of ScalingReport), 'matches' (list of
            MatchReport), 'ordering' (formula -> L-inf per epsilon),
            'errors' (failed epsilons)

    Raises:
        PipelineError: stage 'fit' when too few runs succeeded
    """
    if name not in STUDIES:
        raise DomainError(f"Unknown study '{name}'; choose from {', '.join(STUDIES)}")
    settings = settings or {}
    artifacts = artifacts if artifacts is not None else []
    profile = sech2_profile()
    cp = critical_point(profile)
    t = settings['t'] if settings.get('t') is not None else study_time(STUDIES[name]['t'], cp)
    comparisons, match_specs = study_comparisons(name, settings, t, cp)
    study = {'comparisons': comparisons, 'matches': match_specs}
    needs_zone = any(f == 'onephase' for f, _, _ in comparisons) or \
        any('onephase' in (a, b) for a, b, _, _ in match_specs)
    ctx = build_context(t, profile, nc=settings.get('nc', 64), need_zone=needs_zone)
    eps_list = sorted((validate_epsilon(e) for e in epsilons), reverse=True)

    summary = run_bulk(f"Study {name}", eps_list, _study_item, study, ctx, settings, artifacts, out_dir,
                       progress=progress, workers=int(settings.get('workers') or 1))
    results = summary['results']
    done = [e for e in eps_list if e in results]
    smoke = len(eps_list) < MIN_FIT_POINTS and len(done) == len(eps_list)
    if done and len(done) < MIN_FIT_POINTS and not smoke:
        failed = ', '.join(f"{e:.6g}" for e, _ in summary['errors'])
        raise PipelineError(f"Only {len(done)} of {len(eps_list)} runs succeeded (failed: {failed}); "
                            f"a scaling fit needs {MIN_FIT_POINTS}", stage='fit')

    reports = []
    ordering = {}
    for formula, region_kind, _ in comparisons:
        deltas = [results[e]['deltas'][(formula, region_kind)] for e in done]
        ordering[f"{formula}/{region_kind}"] = deltas
        if smoke:
            reports.append(ScalingReport.unfitted(done, deltas, region=region_kind, formula=formula))
        elif done:
            reports.append(scaling_fit(done, deltas, region=region_kind, formula=formula))

    matches = []
    for e in done:
        matches.extend(m for _, m in results[e]['matches'])
    for formula_a, formula_b, region_kind, _ in match_specs:
        for side in (0, 1):
            pairs = [(e, m.errors[side]) for e in done for (names, m) in results[e]['matches']
                     if names == (formula_a, formula_b) and m.errors[side]]
            if len(pairs) >= MIN_FIT_POINTS:
                reports.append(scaling_fit([p[0] for p in pairs], [p[1] for p in pairs],
                                           region=f"match-{region_kind}-{'left' if side == 0 else 'right'}",
                                           formula=f"{formula_a}|{formula_b}"))
    for report in reports:
        if report.a is None:
            log_info("Harness", f"{name}: {report.formula} on {report.region}: {len(report.epsilons)} "
                                f"epsilon(s), no fit")
            continue
        log_info("Harness", f"{name}: {report.formula} on {report.region}: a={report.a:.4f} "
                            f"sigma_a={report.sigma_a:.4f} r={report.r:.6f}")
    return {'reports': reports, 'matches': matches, 'ordering': ordering,
            'errors': summary['errors'], 'epsilons': done}


def preview_study(settings, progress=None):
    """
    Dry run of a pipeline: resolve the study without solving anything.

    Returns:
        list: (epsilon, N, Nt) per run, in sweep order
    """
    name = settings.get('study', 'prebreakup')
    cp = critical_point(sech2_profile())
    if name not in STUDIES:
        raise DomainError(f"Unknown study '{name}'; choose from {', '.join(STUDIES)}")
    t = settings['t'] if settings.get('t') is not None else study_time(STUDIES[name]['t'], cp)
    comparisons, _ = study_comparisons(name, settings, t, cp)
    eps_list = sorted((validate_epsilon(e) for e in settings.get('epsilons', ())), reverse=True)
    run_bulk(f"Study {name}", eps_list, _study_item, progress=progress, dry_run=True)

    plan = []
    for eps in eps_list:
        N, Nt = resolution_for(eps, settings.get('extended', False))
        plan.append((eps, settings.get('nmodes') or N, settings.get('nsteps') or Nt))
    log_info("Pipeline", f"Dry run of '{name}' at t={t:.6g}: {len(plan)} runs, "
                         f"comparisons {', '.join(f'{f}/{r}' for f, r, _ in comparisons)}")
    return plan


def write_report(path, reports, matches=None, meta=None):
    """
    Write scaling reports (and optional matching reports) as JSON.

    Each report carries {region, formula, epsilons, deltas, a, b, r, sigma_a}.
    Keys are sorted so identical inputs give identical files.

    Returns:
        tuple: (success: bool, error_message: str or None)
    """
    payload = {'reports': [r.to_dict() for r in reports]}
    if matches:
        payload['matches'] = [m.to_dict() for m in matches]
    if meta:
        payload['meta'] = meta
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(payload, f, indent=2, sort_keys=True)
            f.write('\n')
        return (True, None)
    except Exception as e:
        error_msg = f"Error writing report {path}: {str(e)}"
        log_error("Write Report", error_msg)
        return (False, error_msg)


def _mark_partial(paths):
    for path in paths:
        if os.path.exists(path):
            os.replace(path, path + '.partial')


def run_pipeline(settings, progress=None):
    """
    Full study: KdV runs, approximations, errors, fits, matching, report.

    Args:
        settings (dict): Parsed configuration (see utils.config)
        progress (callable, optional): Receives progress dicts

    Returns:
        str: Path of the JSON report

    Raises:
        PipelineError: Naming the failing stage; artifacts written so far
            are renamed with a .partial suffix
    """
    out_dir = settings.get('out') or 'reports'
    name = settings.get('study', 'prebreakup')
    artifacts = []
    stage = 'setup'
    try:
        os.makedirs(out_dir, exist_ok=True)
        stage = 'study'
        result = run_study(name, settings.get('epsilons', ()), settings, out_dir=out_dir,
                           progress=progress, artifacts=artifacts)
        if result['errors'] and not result['epsilons']:
            item, message = result['errors'][0]
            raise PipelineError(f"All runs failed; first failure at eps={item}: {message}", stage='solve')
        stage = 'report'
        path = os.path.join(out_dir, f"{name}_report.json")
        meta = {'study': name, 'ordering': result['ordering'],
                'failed': [[float(e), str(msg)] for e, msg in result['errors']]}
        ok, error = write_report(path, result['reports'], result['matches'], meta)
        if not ok:
            raise PipelineError(error, stage='report')
        artifacts.append(path)
        log_info("Pipeline", f"Study '{name}' finished: {len(result['reports'])} report rows written to {path}")
        return path
    except PipelineError as e:
        _mark_partial(artifacts)
        log_error("Pipeline", f"Stage '{e.stage}' failed: {str(e)}")
        raise
    except KdVStudyError as e:
        _mark_partial(artifacts)
        log_error("Pipeline", f"Stage '{stage}' failed: {type(e).__name__}: {str(e)}")
        raise PipelineError(f"{type(e).__name__}: {str(e)}", stage=stage) from e
