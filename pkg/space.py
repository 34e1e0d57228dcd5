"""
Geometría del problema de planificación
Cajas d-dimensionales, obstáculos, zonas de coste, colisiones, coste de aristas,
heurística y muestreo reproducible del espacio libre.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

logger = logging.getLogger(__name__)

RNG_ALGORITHM = 'PCG64'


class ScenarioError(ValueError):
    """Escenario inválido o mal formado; `field` nombra el campo culpable"""

    def __init__(self, field_name, message):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


class SamplingBudgetExhausted(RuntimeError):
    """Demasiados rechazos consecutivos: el espacio libre está (casi) bloqueado"""

    def __init__(self, attempts):
        self.attempts = attempts
        super().__init__(f"no free sample after {attempts} consecutive rejections")


@dataclass(frozen=True)
class AxisBox:
    min_corner: Tuple[float, ...]
    max_corner: Tuple[float, ...]

    @property
    def dimension(self):
        return len(self.min_corner)

    def volume(self):
        return float(np.prod(np.subtract(self.max_corner, self.min_corner)))

    def contains(self, x):
        """Pertenencia a la caja cerrada"""
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.min_corner) and np.all(x <= self.max_corner))

    def contains_interior(self, x):
        x = np.asarray(x, dtype=float)
        return bool(np.all(x > self.min_corner) and np.all(x < self.max_corner))

    def overlaps_interior(self, other):
        lo = np.maximum(self.min_corner, other.min_corner)
        hi = np.minimum(self.max_corner, other.max_corner)
        return bool(np.all(lo < hi))


@dataclass(frozen=True)
class CostZone:
    region: AxisBox
    coefficient: float


@dataclass(frozen=True)
class Scenario:
    bounds: AxisBox
    obstacles: Tuple[AxisBox, ...]
    zones: Tuple[CostZone, ...]
    x_init: Tuple[float, ...]
    goal: AxisBox
    default_coefficient: float = 1.0
    name: str = ''
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        d = self.bounds.dimension

        def stack(boxes, attr):
            if not boxes:
                return np.empty((0, d))
            arr = np.array([getattr(b, attr) for b in boxes], dtype=float)
            arr.setflags(write=False)
            return arr

        object.__setattr__(self, '_obs_lo', stack(self.obstacles, 'min_corner'))
        object.__setattr__(self, '_obs_hi', stack(self.obstacles, 'max_corner'))
        regions = [z.region for z in self.zones]
        object.__setattr__(self, '_zone_lo', stack(regions, 'min_corner'))
        object.__setattr__(self, '_zone_hi', stack(regions, 'max_corner'))
        coef = np.array([z.coefficient for z in self.zones], dtype=float)
        coef.setflags(write=False)
        object.__setattr__(self, '_zone_coef', coef)

    @property
    def dimension(self):
        return self.bounds.dimension

    @property
    def c_min(self):
        return min([self.default_coefficient] + [z.coefficient for z in self.zones])

    @property
    def c_max(self):
        return max([self.default_coefficient] + [z.coefficient for z in self.zones])


class SeededRng:
    """
    Generador reproducible: PCG64 alimentado por SeedSequence(base_seed, spawn_key=(trial,)).
    Misma semilla => misma secuencia en cualquier plataforma.
    """

    algorithm_name = RNG_ALGORITHM

    def __init__(self, base_seed=0, trial_index=0):
        self.base_seed = int(base_seed)
        self.trial_index = int(trial_index)
        seq = np.random.SeedSequence(self.base_seed, spawn_key=(self.trial_index,))
        self.generator = np.random.Generator(np.random.PCG64(seq))

    def uniform(self, low, high):
        return self.generator.uniform(low, high)


def make_rng(base_seed, trial_index=0):
    return SeededRng(base_seed, trial_index)


# ---------------------------------------------------------------------------
# Carga y validación de escenarios
# ---------------------------------------------------------------------------

def _point(value, field_name, dimension):
    if not isinstance(value, (list, tuple)):
        raise ScenarioError(field_name, "expected a list of numbers")
    if len(value) != dimension:
        raise ScenarioError(field_name, f"expected {dimension} coordinates, got {len(value)}")
    try:
        coords = tuple(float(v) for v in value)
    except (TypeError, ValueError):
        raise ScenarioError(field_name, "coordinates must be numbers")
    if not all(math.isfinite(c) for c in coords):
        raise ScenarioError(field_name, "coordinates must be finite")
    return coords


def _box(doc, field_name, dimension):
    if not isinstance(doc, dict) or 'min' not in doc or 'max' not in doc:
        raise ScenarioError(field_name, "expected an object with 'min' and 'max'")
    lo = _point(doc['min'], f"{field_name}.min", dimension)
    hi = _point(doc['max'], f"{field_name}.max", dimension)
    if not all(a < b for a, b in zip(lo, hi)):
        raise ScenarioError(field_name, "min must be strictly below max on every axis")
    return AxisBox(lo, hi)


def scenario_from_dict(doc):
    """Construye y valida un Scenario a partir del documento JSON"""
    if not isinstance(doc, dict):
        raise ScenarioError('scenario', "top-level document must be an object")
    for key in ('dimension', 'bounds', 'x_init', 'goal'):
        if key not in doc:
            raise ScenarioError(key, "missing required field")

    dimension = doc['dimension']
    if not isinstance(dimension, int) or isinstance(dimension, bool) or dimension < 2:
        raise ScenarioError('dimension', "must be an integer >= 2")

    bounds = _box(doc['bounds'], 'bounds', dimension)
    obstacles = tuple(
        _box(o, f"obstacles[{i}]", dimension) for i, o in enumerate(doc.get('obstacles', []))
    )

    zones = []
    for i, z in enumerate(doc.get('zones', [])):
        region = _box(z, f"zones[{i}]", dimension)
        try:
            coefficient = float(z.get('coefficient'))
        except (TypeError, ValueError):
            raise ScenarioError(f"zones[{i}].coefficient", "must be a number")
        if not coefficient > 0 or not math.isfinite(coefficient):
            raise ScenarioError(f"zones[{i}].coefficient", "must be positive")
        zones.append(CostZone(region, coefficient))
    for i in range(len(zones)):
        for j in range(i + 1, len(zones)):
            if zones[i].region.overlaps_interior(zones[j].region):
                raise ScenarioError(f"zones[{j}]", f"overlaps zones[{i}]")

    try:
        default_coefficient = float(doc.get('default_coefficient', 1.0))
    except (TypeError, ValueError):
        raise ScenarioError('default_coefficient', "must be a number")
    if not default_coefficient > 0:
        raise ScenarioError('default_coefficient', "must be positive")

    x_init = _point(doc['x_init'], 'x_init', dimension)
    if not bounds.contains(x_init):
        raise ScenarioError('x_init', "outside bounds")
    for i, o in enumerate(obstacles):
        if o.contains_interior(x_init):
            raise ScenarioError('x_init', f"inside obstacles[{i}]")

    goal = _box(doc['goal'], 'goal', dimension)
    if not (bounds.contains(goal.min_corner) and bounds.contains(goal.max_corner)):
        raise ScenarioError('goal', "not contained in bounds")
    for i, o in enumerate(obstacles):
        if goal.overlaps_interior(o):
            raise ScenarioError('goal', f"intersects obstacles[{i}]")

    scenario = Scenario(
        bounds=bounds,
        obstacles=obstacles,
        zones=tuple(zones),
        x_init=x_init,
        goal=goal,
        default_coefficient=default_coefficient,
        name=str(doc.get('name', '')),
        metadata=dict(doc.get('metadata', {})),
    )
    if free_volume(scenario) <= 0:
        raise ScenarioError('obstacles', "free space has no volume")
    return scenario


def scenario_to_dict(scenario):
    def box(b):
        return {'min': list(b.min_corner), 'max': list(b.max_corner)}

    doc = {
        'name': scenario.name,
        'dimension': scenario.dimension,
        'bounds': box(scenario.bounds),
        'obstacles': [box(o) for o in scenario.obstacles],
        'zones': [dict(box(z.region), coefficient=z.coefficient) for z in scenario.zones],
        'x_init': list(scenario.x_init),
        'goal': box(scenario.goal),
        'default_coefficient': scenario.default_coefficient,
    }
    if scenario.metadata:
        doc['metadata'] = dict(scenario.metadata)
    return doc


def load_scenario(path):
    """Lee un fichero de escenario JSON; errores de formato como ScenarioError"""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            doc = json.load(f)
    except OSError as e:
        raise ScenarioError('scenario', f"cannot read {path}: {e}")
    except json.JSONDecodeError as e:
        raise ScenarioError('scenario', f"malformed JSON at line {e.lineno}: {e.msg}")
    scenario = scenario_from_dict(doc)
    logger.info(f"Loaded scenario '{scenario.name or path}' "
                f"(d={scenario.dimension}, {len(scenario.obstacles)} obstacles, "
                f"{len(scenario.zones)} zones)")
    return scenario


# ---------------------------------------------------------------------------
# Consultas geométricas
# ---------------------------------------------------------------------------

def point_in_obstacle(x, scenario):
    if not scenario.obstacles:
        return False
    x = np.asarray(x, dtype=float)
    return bool(np.any(np.all((x > scenario._obs_lo) & (x < scenario._obs_hi), axis=1)))


def in_goal(x, scenario):
    return scenario.goal.contains(x)


def free_volume(scenario):
    """Volumen de X_free: caja del mundo menos obstáculos recortados a ella"""
    total = scenario.bounds.volume()
    lo_b = np.asarray(scenario.bounds.min_corner)
    hi_b = np.asarray(scenario.bounds.max_corner)
    for o in scenario.obstacles:
        extent = np.minimum(o.max_corner, hi_b) - np.maximum(o.min_corner, lo_b)
        total -= float(np.prod(np.clip(extent, 0.0, None)))
    return total


def sample_free(rng, scenario, budget=10000):
    """Muestreo uniforme en X_free por rechazo desde la caja del mundo"""
    lo = np.asarray(scenario.bounds.min_corner)
    hi = np.asarray(scenario.bounds.max_corner)
    for _ in range(budget):
        x = rng.uniform(lo, hi)
        if not point_in_obstacle(x, scenario):
            return x
    raise SamplingBudgetExhausted(budget)


def _ordered(a, points):
    """
    Ordena cada par (a, p) lexicográficamente para que el resultado
    no dependa del sentido del segmento.
    """
    a = np.asarray(a, dtype=float)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    diff = points - a
    first = np.argmax(diff != 0, axis=1)
    swap = diff[np.arange(len(points)), first] < 0
    start = np.where(swap[:, None], points, a)
    end = np.where(swap[:, None], a, points)
    return start, end


def _slab_interval(start, delta, lo, hi):
    """
    Intervalo paramétrico [enter, exit] de cada segmento (k) dentro del
    interior de cada caja (m), recortado a [0, 1]. Devuelve arrays (k, m).
    """
    p = start[:, None, :]
    dv = delta[:, None, :]
    with np.errstate(divide='ignore', invalid='ignore'):
        t1 = (lo[None, :, :] - p) / dv
        t2 = (hi[None, :, :] - p) / dv
    t_lo = np.minimum(t1, t2)
    t_hi = np.maximum(t1, t2)
    flat = dv == 0
    inside = (p > lo[None, :, :]) & (p < hi[None, :, :])
    t_lo = np.where(flat, np.where(inside, -np.inf, np.inf), t_lo)
    t_hi = np.where(flat, np.where(inside, np.inf, -np.inf), t_hi)
    enter = np.maximum(t_lo.max(axis=2), 0.0)
    exit_ = np.minimum(t_hi.min(axis=2), 1.0)
    return enter, exit_


def segments_obstacle_free(a, points, scenario):
    """Para cada p en points: True si el segmento cerrado [a, p] no toca el interior de ningún obstáculo"""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if not scenario.obstacles or len(points) == 0:
        return np.ones(len(points), dtype=bool)
    start, end = _ordered(a, points)
    enter, exit_ = _slab_interval(start, end - start, scenario._obs_lo, scenario._obs_hi)
    return ~np.any(enter < exit_, axis=1)


def segment_obstacle_free(a, b, scenario):
    return bool(segments_obstacle_free(a, [b], scenario)[0])


def edge_costs(a, points, scenario):
    """
    Integral de línea del coeficiente de zona a lo largo de [a, p], exacta
    por recorte paramétrico contra cada zona.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if len(points) == 0:
        return np.empty(0)
    start, end = _ordered(a, points)
    delta = end - start
    length = np.sqrt((delta * delta).sum(axis=1))
    if not scenario.zones:
        return scenario.default_coefficient * length
    enter, exit_ = _slab_interval(start, delta, scenario._zone_lo, scenario._zone_hi)
    fraction = np.clip(exit_ - enter, 0.0, None)
    inside = fraction.sum(axis=1)
    zoned = (fraction * scenario._zone_coef[None, :]).sum(axis=1)
    return length * (scenario.default_coefficient * np.clip(1.0 - inside, 0.0, None) + zoned)


def edge_cost(a, b, scenario):
    return float(edge_costs(a, [b], scenario)[0])


def path_cost(points, scenario):
    points = np.asarray(points, dtype=float)
    total = 0.0
    for a, b in zip(points[:-1], points[1:]):
        total += edge_cost(a, b, scenario)
    return total


def zone_arc_length(points, scenario, coefficient=None):
    """Longitud de la polilínea dentro de zonas (opcionalmente solo las de un coeficiente)"""
    points = np.asarray(points, dtype=float)
    if len(points) < 2 or not scenario.zones:
        return 0.0
    selected = np.ones(len(scenario.zones), dtype=bool)
    if coefficient is not None:
        selected = np.isclose(scenario._zone_coef, coefficient)
    total = 0.0
    for a, b in zip(points[:-1], points[1:]):
        start, end = _ordered(a, [b])
        delta = end - start
        enter, exit_ = _slab_interval(start, delta, scenario._zone_lo, scenario._zone_hi)
        fraction = np.clip(exit_ - enter, 0.0, None)[0]
        total += float(np.linalg.norm(delta[0])) * float(fraction[selected].sum())
    return total


def heuristic(x, scenario):
    """c_min × distancia euclídea a la caja objetivo (0 dentro de ella)"""
    x = np.asarray(x, dtype=float)
    nearest = np.clip(x, scenario.goal.min_corner, scenario.goal.max_corner)
    return scenario.c_min * float(np.linalg.norm(x - nearest))


def straight_line_bound(scenario):
    """Cota inferior del coste óptimo: heurística desde x_init"""
    return heuristic(scenario.x_init, scenario)


def unit_ball_volume(dimension):
    return math.pi ** (dimension / 2.0) / math.gamma(dimension / 2.0 + 1.0)


def connection_gamma(scenario):
    """γ = 2 (1 + 1/d)^(1/d) (μ(X_free) / ζ_d)^(1/d)"""
    d = scenario.dimension
    return 2.0 * (1.0 + 1.0 / d) ** (1.0 / d) * (free_volume(scenario) / unit_ball_volume(d)) ** (1.0 / d)


def connection_radius(n, gamma, eta, dimension):
    """r(n) = min(γ (log n / n)^(1/d), η)"""
    if n <= 1:
        return 0.0
    return min(gamma * (math.log(n) / n) ** (1.0 / dimension), eta)

