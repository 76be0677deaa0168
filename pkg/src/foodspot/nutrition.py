"""One-serving nutrition lookup and meal aggregation.

The bundled tab-separated database covers the full label set shipped with
the detector; a remote client shaped like a natural-language nutrients API
can be plugged in for live lookups, falling back to the local table (with
a logged warning) whenever the remote call fails. Matching is exact after
case folding and whitespace normalization: a silent fuzzy match would
fabricate nutrition data.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import requests

from .boxes import Detection

logger = logging.getLogger(__name__)

DEFAULT_DB_PATH = os.path.join(os.path.dirname(__file__), "data", "nutrition_db.tsv")
DEFAULT_LABELS_PATH = os.path.join(os.path.dirname(__file__), "data", "food_labels.txt")

ENV_BASE_URL = "FOODSPOT_NUTRITION_URL"
ENV_APP_ID = "FOODSPOT_NUTRITION_APP_ID"
ENV_APP_KEY = "FOODSPOT_NUTRITION_APP_KEY"

_NUMERIC_FIELDS = (
    "serving_qty",
    "calories",
    "total_fat",
    "carbohydrates",
    "protein",
    "sugars",
    "sodium",
)


class UnknownFoodError(LookupError):
    def __init__(self, label: str):
        super().__init__(f"no nutrition record for {label!r}")
        self.label = label


class RemoteLookupError(RuntimeError):
    """Remote nutrition endpoint failed (network, HTTP, or bad payload)."""


class RemoteTimeoutError(RemoteLookupError):
    """Remote nutrition endpoint exceeded its configured timeout."""


@dataclass(frozen=True)
class NutritionFacts:
    """Macro-nutrients for one serving. Units: kcal, grams, mg sodium."""

    label: str
    serving_qty: float
    serving_unit: str
    calories: float
    total_fat: float
    carbohydrates: float
    protein: float
    sugars: float
    sodium: float

    def __post_init__(self):
        for name in _NUMERIC_FIELDS:
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class MealAnalysis:
    """Per-detection facts plus exact sums; items are confidence-descending."""

    items: Tuple[Tuple[Detection, NutritionFacts], ...]
    totals: NutritionFacts
    missing: Tuple[str, ...]


def normalize_label(label: str) -> str:
    return " ".join(label.split()).casefold()


class NutritionDatabase:
    """In-memory table keyed by normalized label; immutable after load."""

    def __init__(self, records: Sequence[NutritionFacts]):
        self._records: Dict[str, NutritionFacts] = {}
        for rec in records:
            self._records[normalize_label(rec.label)] = rec

    @classmethod
    def from_file(cls, path: str = DEFAULT_DB_PATH) -> "NutritionDatabase":
        records = []
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n").split("\t")
            idx = {name: i for i, name in enumerate(header)}
            required = ("label", "serving_qty", "serving_unit") + _NUMERIC_FIELDS[1:]
            for name in required:
                if name not in idx:
                    raise ValueError(f"{path}: missing column {name!r}")
            for line_no, line in enumerate(fh, start=2):
                if not line.strip() or line.startswith("#"):
                    continue
                cells = line.rstrip("\n").split("\t")
                if len(cells) != len(header):
                    raise ValueError(f"{path}:{line_no}: expected {len(header)} columns")
                try:
                    records.append(
                        NutritionFacts(
                            label=cells[idx["label"]],
                            serving_qty=float(cells[idx["serving_qty"]]),
                            serving_unit=cells[idx["serving_unit"]],
                            calories=float(cells[idx["calories"]]),
                            total_fat=float(cells[idx["total_fat"]]),
                            carbohydrates=float(cells[idx["carbohydrates"]]),
                            protein=float(cells[idx["protein"]]),
                            sugars=float(cells[idx["sugars"]]),
                            sodium=float(cells[idx["sodium"]]),
                        )
                    )
                except ValueError as exc:
                    raise ValueError(f"{path}:{line_no}: {exc}") from exc
        return cls(records)

    def lookup(self, label: str) -> NutritionFacts:
        key = normalize_label(label)
        if not key:
            raise ValueError("empty label")
        try:
            return self._records[key]
        except KeyError:
            raise UnknownFoodError(label) from None

    def labels(self) -> List[str]:
        return [rec.label for rec in self._records.values()]

    def __len__(self) -> int:
        return len(self._records)


# transport(url, payload, headers, timeout) -> (status_code, parsed_json)
Transport = Callable[[str, dict, dict, float], Tuple[int, dict]]


def _requests_transport(url: str, payload: dict, headers: dict, timeout: float):
    try:
        resp = requests.post(url, json=payload, headers=headers, timeout=timeout)
    except requests.Timeout as exc:
        raise RemoteTimeoutError(f"nutrition endpoint timed out after {timeout}s") from exc
    except requests.RequestException as exc:
        raise RemoteLookupError(f"nutrition endpoint unreachable: {exc}") from exc
    try:
        return resp.status_code, resp.json()
    except ValueError as exc:
        raise RemoteLookupError(f"nutrition endpoint returned non-JSON: {exc}") from exc


class RemoteNutritionClient:
    """Client for a natural-language nutrients endpoint.

    POST {base_url}/v2/natural/nutrients with {"query": label}; the reply's
    foods[0] carries nf_-prefixed macro fields. Credentials travel in
    x-app-id / x-app-key headers, read from the environment by from_env().
    """

    def __init__(
        self,
        base_url: str,
        app_id: str = "",
        app_key: str = "",
        timeout: float = 2.0,
        transport: Optional[Transport] = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._headers = {"x-app-id": app_id, "x-app-key": app_key}
        self._transport = transport or _requests_transport

    @classmethod
    def from_env(cls) -> Optional["RemoteNutritionClient"]:
        base = os.environ.get(ENV_BASE_URL, "")
        if not base:
            return None
        return cls(
            base,
            app_id=os.environ.get(ENV_APP_ID, ""),
            app_key=os.environ.get(ENV_APP_KEY, ""),
        )

    def lookup(self, label: str) -> NutritionFacts:
        url = f"{self.base_url}/v2/natural/nutrients"
        status, doc = self._transport(url, {"query": label}, self._headers, self.timeout)
        if status == 404:
            raise UnknownFoodError(label)
        if status != 200:
            raise RemoteLookupError(f"nutrition endpoint returned HTTP {status}")
        foods = doc.get("foods") or []
        if not foods:
            raise UnknownFoodError(label)
        f = foods[0]
        try:
            return NutritionFacts(
                label=f.get("food_name", label),
                serving_qty=float(f["serving_qty"]),
                serving_unit=str(f.get("serving_unit", "serving")),
                calories=float(f["nf_calories"]),
                total_fat=float(f["nf_total_fat"]),
                carbohydrates=float(f["nf_total_carbohydrate"]),
                protein=float(f["nf_protein"]),
                sugars=float(f["nf_sugars"]),
                sodium=float(f["nf_sodium"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise RemoteLookupError(f"malformed nutrition payload: {exc}") from exc


class NutritionService:
    """Lookup routing: bundled table, or remote endpoint with local fallback."""

    def __init__(self, db: NutritionDatabase, remote: Optional[RemoteNutritionClient] = None):
        self.db = db
        self.remote = remote

    def lookup(self, label: str, source: str = "local") -> NutritionFacts:
        if source not in ("local", "remote"):
            raise ValueError(f"unknown source {source!r}")
        if source == "local":
            return self.db.lookup(label)
        if self.remote is None:
            logger.warning("no remote nutrition client configured; using local table")
            return self.db.lookup(label)
        try:
            return self.remote.lookup(label)
        except UnknownFoodError:
            # remote has no record; the local table is the last resort
            return self.db.lookup(label)
        except RemoteLookupError as exc:
            logger.warning("remote nutrition lookup failed (%s); using local table", exc)
            return self.db.lookup(label)


def analyze(
    dets: Sequence[Detection],
    labels: Mapping[int, str] | Sequence[str],
    service: NutritionService | NutritionDatabase,
    source: str = "local",
) -> MealAnalysis:
    """One lookup per detection (cached per label), exact sums, partial on misses."""
    lookup = (
        (lambda lbl: service.lookup(lbl, source))
        if isinstance(service, NutritionService)
        else service.lookup
    )
    ordered = sorted(dets, key=lambda d: -d.confidence)
    cache: Dict[str, Optional[NutritionFacts]] = {}
    items: List[Tuple[Detection, NutritionFacts]] = []
    missing: List[str] = []
    for det in ordered:
        label = labels[det.class_id]
        key = normalize_label(label)
        if key not in cache:
            try:
                cache[key] = lookup(label)
            except UnknownFoodError:
                cache[key] = None
        facts = cache[key]
        if facts is None:
            missing.append(label)
        else:
            items.append((det, facts))
    sums = {name: sum(getattr(f, name) for _, f in items) for name in _NUMERIC_FIELDS}
    totals = NutritionFacts(label="meal total", serving_unit="serving", **sums)
    return MealAnalysis(items=tuple(items), totals=totals, missing=tuple(missing))
