"""Deterministic synthetic population generation.

Every characteristic and input is sampled independently of the others
(a deliberate simplification: the marginals can be made to match
published aggregates, their joint distribution cannot), and everything
derives from one seeded generator so a config plus a seed pins the
population exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError
from .population import HOUSEHOLD_INCOME, PERSONAL_INCOME, Population, Taxpayer


@dataclass(frozen=True)
class Marginal:
    """Univariate sampling recipe for one input column.

    ``lognormal`` fits its two free parameters to the requested mean
    and median of the nonzero part; ``zero_share`` of the samples are
    exactly zero; values above ``maximum`` are clipped.
    """

    kind: str = "lognormal"
    mean: float = 0.0
    median: float | None = None
    value: float = 0.0
    zero_share: float = 0.0
    maximum: float | None = None

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "constant":
            return np.full(n, self.value)
        if self.kind != "lognormal":
            raise ValidationError([f"unknown marginal kind {self.kind!r}"])
        positive_mean = self.mean / max(1e-12, 1.0 - self.zero_share)
        median = self.median if self.median is not None else positive_mean * 0.8
        if median <= 0 or positive_mean <= median:
            raise ValidationError(
                [f"lognormal marginal needs 0 < median < mean/(1-zero_share), "
                 f"got median={median}, adjusted mean={positive_mean}"]
            )
        sigma = math.sqrt(2.0 * math.log(positive_mean / median))
        mu = math.log(median)
        values = rng.lognormal(mu, sigma, size=n)
        if self.maximum is not None:
            values = np.minimum(values, self.maximum)
        if self.zero_share > 0:
            zero = rng.random(n) < self.zero_share
            values = np.where(zero, 0.0, values)
        return values


def _check_shares(name: str, shares: dict[str, float]) -> None:
    total = sum(shares.values())
    if abs(total - 1.0) > 1e-9:
        raise ValidationError([f"{name} shares sum to {total!r}, expected 1"])
    if any(v < 0 for v in shares.values()):
        raise ValidationError([f"{name} shares must be non-negative"])


@dataclass(frozen=True)
class SyntheticPopulationConfig:
    taxpayers: int = 13_500
    households: int = 8_500
    seed: int | None = None
    weight: float = 1_000.0
    income: Marginal = field(default_factory=lambda: Marginal(
        kind="lognormal", mean=33_194.31, median=27_011.0, zero_share=0.02,
        maximum=420_000.0))
    home_value: Marginal = field(default_factory=lambda: Marginal(
        kind="lognormal", mean=211_480.70, median=230_000.0, zero_share=0.35,
        maximum=550_000.0))
    assets: Marginal = field(default_factory=lambda: Marginal(
        kind="lognormal", mean=83_854.22, median=77_872.0, zero_share=0.05,
        maximum=250_000.0))
    monthly_rent: Marginal = field(default_factory=lambda: Marginal(
        kind="lognormal", mean=529.58, median=700.0, zero_share=0.55,
        maximum=2_600.0))
    income_source_shares: dict[str, float] = field(default_factory=lambda: {
        "benefits": 0.245, "employment": 0.65, "self_employed": 0.105})
    pension_age_share: float = 0.245
    children_shares: dict[str, float] = field(default_factory=lambda: {
        "0": 0.55, "1": 0.17, "2": 0.19, "3": 0.07, "4": 0.02})

    def __post_init__(self):
        if self.seed is None:
            raise ValidationError(["synthetic generation requires an explicit seed"])
        if self.taxpayers < 0 or self.households < 0:
            raise ValidationError(["counts must be non-negative"])
        if self.taxpayers:
            pairs = self.taxpayers - self.households
            singles = 2 * self.households - self.taxpayers
            if pairs < 0 or singles < 0:
                raise ValidationError(
                    [f"{self.taxpayers} taxpayers cannot form {self.households} "
                     "households of size one or two"]
                )
        _check_shares("income_source", self.income_source_shares)
        _check_shares("children", self.children_shares)
        if not 0 <= self.pension_age_share <= 1:
            raise ValidationError(["pension_age_share must lie in [0, 1]"])

    @classmethod
    def from_json(cls, doc: dict) -> "SyntheticPopulationConfig":
        kwargs = dict(doc)
        for name in ("income", "home_value", "assets", "monthly_rent"):
            if name in kwargs:
                kwargs[name] = Marginal(**kwargs[name])
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ValidationError([f"config: {exc}"]) from exc


def _pick(rng: np.random.Generator, shares: dict[str, float], n: int) -> list[str]:
    labels = sorted(shares)
    probs = np.array([shares[k] for k in labels])
    probs = probs / probs.sum()
    idx = rng.choice(len(labels), size=n, p=probs)
    return [labels[i] for i in idx]


def generate_population(config: SyntheticPopulationConfig, code=None) -> Population:
    """Build a population; ``code`` (when given) stamps current taxes.

    Without a code current taxes are zero, which is only useful as an
    intermediate product: every reform recipe needs real baselines.
    """
    rng = np.random.default_rng(config.seed)
    n = config.taxpayers
    if n == 0:
        return Population((), provenance={"generator": "synthetic", "seed": config.seed})
    pairs = n - config.households

    incomes = config.income.sample(rng, n)
    home_values = config.home_value.sample(rng, n)
    assets = config.assets.sample(rng, n)
    rents = config.monthly_rent.sample(rng, n)
    sources = _pick(rng, config.income_source_shares, n)
    pension = rng.random(n) < config.pension_age_share
    children_per_household = _pick(rng, config.children_shares, config.households)

    taxpayers = []
    member_of: list[str] = []
    first_member: list[bool] = []
    for h in range(config.households):
        hid = f"h{h:05d}"
        size = 2 if h < pairs else 1
        for k in range(size):
            member_of.append(hid)
            first_member.append(k == 0)

    for i in range(n):
        hid = member_of[i]
        children = float(children_per_household[int(hid[1:])]) if first_member[i] else 0.0
        characteristics = {
            "income_source": sources[i],
            "fiscal_partner": "yes" if int(hid[1:]) < pairs else "no",
            "pension_age": "yes" if pension[i] else "no",
            "renter": "yes" if rents[i] > 0 else "no",
            "has_children": "yes" if children_per_household[int(hid[1:])] != "0" else "no",
        }
        inputs = {
            PERSONAL_INCOME: float(round(incomes[i], 2)),
            "home_value": float(round(home_values[i], 2)),
            "assets": float(round(assets[i], 2)),
            "monthly_rent": float(round(rents[i], 2)),
            "children": children,
        }
        taxpayers.append(Taxpayer(
            id=f"t{i:05d}",
            inputs=inputs,
            characteristics=characteristics,
            weight=config.weight,
            household_id=hid,
            current_tax=0.0,
        ))

    # Household income must equal the member sum of the rounded values.
    totals: dict[str, float] = {}
    for t in taxpayers:
        totals[t.household_id] = totals.get(t.household_id, 0.0) + t.inputs[PERSONAL_INCOME]
    stamped = []
    for t in taxpayers:
        inputs = dict(t.inputs)
        inputs[HOUSEHOLD_INCOME] = totals[t.household_id]
        current = code.total_tax(inputs, t.characteristics) if code is not None else 0.0
        stamped.append(Taxpayer(
            id=t.id, inputs=inputs, characteristics=t.characteristics,
            weight=t.weight, household_id=t.household_id, current_tax=current,
        ))
    return Population(
        tuple(stamped),
        provenance={"generator": "synthetic", "seed": config.seed,
                    "code": getattr(code, "name", None)},
    )
