"""
Local-hidden-variable decompositions of the two-qubit family

    rho(s; U_A) = lam (U_A x 1)|psi_s><psi_s|(U_A x 1)^dag + (1 - lam) 1/2 x tr_A[...]

with |psi_s> = s|00> + sqrt(1 - s^2)|11>, as convex combinations of noisy Bell
states and states with symmetric extensions. Every class is a cone, so one SDP
decides a decomposition; with lam as a variable the same SDP maximizes it.
"""
import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterable, List, Literal, Optional, Sequence, TextIO, Tuple

import numpy as np
from loguru import logger

from app.core.config import settings
from app.core.errors import DimensionMismatch, NumericalFailure, RangeError, TooManyCopies, UnknownClass
from app.models.conic import (
    Block,
    ConicCertificate,
    ConicProblem,
    Equality,
    Scalar,
    ScalarTerm,
    SolverTolerances,
    Term,
)
from app.models.results import (
    CurveRow,
    CurveTable,
    DecompositionComponent,
    DecompositionResult,
    StateFamilyPoint,
)
from app.services import conic
from app.services.hermitian import (
    dagger,
    identity,
    ket,
    max_entangled,
    partial_trace,
    permutation_operator,
    symmetric_subspace_isometry,
    tensor,
)
from app.services.steering import require_density
from app.services.strategies import NOISE_SCALAR, bisect_threshold

NOISY_BELL = "noisy_bell"
SYM_EXT_A = "sym_ext_A_2"
SYM_EXT_B = "sym_ext_B"
DEFAULT_CLASSES = (NOISY_BELL, SYM_EXT_A)

Side = Literal["A", "B"]
Symmetry = Literal["permutation", "bose"]
Method = Literal["direct", "bisection"]
Angles = Tuple[float, float, float]


def _rz(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def _ry(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def euler_unitary(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """Rz(alpha) Ry(beta) Rz(gamma)."""
    return _rz(alpha) @ _ry(beta) @ _rz(gamma)


def state_family(s: float, angles: Sequence[float] = (0.0, 0.0, 0.0), lam: float = 1.0) -> StateFamilyPoint:
    if not 1 / math.sqrt(2) - 1e-12 <= s <= 1 + 1e-12:
        raise RangeError(f"Schmidt coefficient {s} outside [1/sqrt(2), 1]")
    if not 0.0 <= lam <= 1.0:
        raise RangeError(f"noise parameter {lam} outside [0, 1]")
    s = min(s, 1.0)
    psi = s * tensor(ket(2, 0), ket(2, 0)) + math.sqrt(max(0.0, 1 - s * s)) * tensor(ket(2, 1), ket(2, 1))
    angles = tuple(float(a) for a in angles)
    unitary = euler_unitary(*angles)
    local = tensor(unitary, identity(2))
    pure = local @ np.outer(psi, psi.conj()) @ dagger(local)
    noise = tensor(identity(2) / 2, partial_trace(pure, (2, 2), keep="B"))
    return StateFamilyPoint(
        s=s,
        angles=angles,
        unitary=unitary,
        lam=lam,
        state=lam * pure + (1 - lam) * noise,
        pure=pure,
        noise=noise,
    )


def _same_up_to_phase(a: np.ndarray, b: np.ndarray) -> bool:
    return abs(abs(np.trace(dagger(a) @ b)) - a.shape[0]) < 1e-9


@lru_cache(maxsize=1)
def clifford_group() -> Tuple[np.ndarray, ...]:
    """The 24 single-qubit Clifford unitaries modulo global phase, generated by H and S."""
    generators = (np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2), np.diag([1, 1j]))
    found = [identity(2)]
    frontier = [identity(2)]
    while frontier:
        new = []
        for u in frontier:
            for g in generators:
                candidate = g @ u
                if not any(_same_up_to_phase(candidate, v) for v in found):
                    found.append(candidate)
                    new.append(candidate)
        frontier = new
    return tuple(found)


def noisy_bell_dictionary(unitary: Optional[np.ndarray] = None, limit: Optional[float] = None) -> List[np.ndarray]:
    """1/4 and (W x 1) rho_iso(limit) (W x 1)^dag for every Clifford W and the given unitary."""
    limit = settings.noisy_bell_limit if limit is None else limit
    isotropic = limit * max_entangled(2) + (1 - limit) * identity(4) / 4
    rotations = list(clifford_group()) + ([] if unitary is None else [unitary])
    elements = [identity(4) / 4]
    for w in rotations:
        local = tensor(w, identity(2))
        elements.append(local @ isotropic @ dagger(local))
    return elements


def trace_out(op: np.ndarray, dims: Sequence[int], position: int) -> np.ndarray:
    """Partial trace over one subsystem of a multipartite operator."""
    n = len(dims)
    tensor_form = op.reshape(list(dims) + list(dims))
    reduced = np.trace(tensor_form, axis1=position, axis2=position + n)
    rest = int(np.prod(dims)) // dims[position]
    return reduced.reshape(rest, rest)


@dataclass(frozen=True)
class ExtensionClass:
    """Two-qubit states with a symmetric extension to `copies` copies of one side.

    Subsystems are ordered A_1..A_n, B for side A and A, B_1..B_n for side B.
    """

    side: Side
    copies: int
    symmetry: Symmetry = "permutation"
    ppt: bool = False
    prefix: str = "ext"

    def __post_init__(self):
        if self.side not in ("A", "B"):
            raise RangeError(f"side must be 'A' or 'B', got {self.side!r}")
        if self.copies < 2:
            raise RangeError(f"an extension needs at least 2 copies, got {self.copies}")
        if self.copies > settings.max_copies:
            raise TooManyCopies(f"{self.copies} copies exceed the limit of {settings.max_copies}")
        if self.symmetry not in ("permutation", "bose"):
            raise RangeError(f"unknown extension symmetry {self.symmetry!r}")

    @property
    def tag(self) -> str:
        return f"sym_ext_{self.side}_{self.copies - 1}"

    @property
    def dims(self) -> List[int]:
        return [2] * (self.copies + 1)

    @property
    def dim(self) -> int:
        return 2 ** (self.copies + 1)

    @property
    def copy_positions(self) -> List[int]:
        return list(range(self.copies)) if self.side == "A" else list(range(1, self.copies + 1))

    def embedding(self) -> Optional[np.ndarray]:
        """Isometry from (symmetric subspace, other side) into the extension space; None without Bose symmetry."""
        if self.symmetry != "bose":
            return None
        v = symmetric_subspace_isometry(2, self.copies)
        return np.kron(v, identity(2)) if self.side == "A" else np.kron(identity(2), v)

    @property
    def variable_dim(self) -> int:
        w = self.embedding()
        return self.dim if w is None else w.shape[1]

    def _reductions(self) -> List[np.ndarray]:
        kept = [0, self.copies] if self.side == "A" else [0, 1]
        traced = [p for p in range(self.copies + 1) if p not in kept]
        perm = [0] * (self.copies + 1)
        for out, position in enumerate(kept + traced):
            perm[position] = out
        p = permutation_operator(self.dims, perm)
        width = 2 ** len(traced)
        maps = [np.kron(identity(4), ket(width, i)[None, :]) @ p for i in range(width)]
        w = self.embedding()
        return maps if w is None else [m @ w for m in maps]

    def reduction_terms(self) -> Tuple[Term, ...]:
        """Terms whose sum is the two-qubit marginal on the first copy."""
        return tuple(Term(self.prefix, left=m, right=dagger(m)) for m in self._reductions())

    def blocks(self) -> Tuple[Block, ...]:
        # the reduction lands inside a trace-one state, so tr X <= 1
        blocks = (Block(self.prefix, self.variable_dim, trace_bound=1.0),)
        if self.ppt:
            blocks += (Block(f"{self.prefix}_pt", self.dim, trace_bound=1.0),)
        return blocks

    def constraints(self) -> List[Equality]:
        out = []
        zero = np.zeros((self.dim, self.dim), dtype=complex)
        if self.symmetry == "permutation":
            first, *others = self.copy_positions
            for j in others:
                perm = list(range(self.copies + 1))
                perm[first], perm[j] = j, first
                swap = permutation_operator(self.dims, perm)
                out.append(
                    Equality(
                        label=f"{self.prefix}_swap{j}",
                        target=zero,
                        terms=(Term(self.prefix, left=swap, right=swap.T), Term(self.prefix, coefficient=-1.0)),
                    )
                )
        if self.ppt:
            # partial transpose on the last subsystem equals a PSD block
            w = self.embedding()
            rest = self.dim // 2
            terms = [Term(f"{self.prefix}_pt")]
            for i in range(2):
                for k in range(2):
                    flip = np.kron(identity(rest), np.outer(ket(2, i), ket(2, k)))
                    left, right = (flip, flip) if w is None else (flip @ w, dagger(w) @ flip)
                    terms.append(Term(self.prefix, coefficient=-1.0, left=left, right=right))
            out.append(Equality(label=f"{self.prefix}_ppt", target=zero, terms=tuple(terms)))
        return out

    def extension(self, values: Dict[str, np.ndarray]) -> np.ndarray:
        """Full extension operator from solved block values."""
        w = self.embedding()
        x = values[self.prefix]
        return x if w is None else w @ x @ dagger(w)

    def marginal(self, values: Dict[str, np.ndarray]) -> np.ndarray:
        return sum(term.apply(values[self.prefix]) for term in self.reduction_terms())

    def drop_copy(self, extension: np.ndarray) -> np.ndarray:
        """Trace out the last copy; the result extends the same state with one copy fewer."""
        return trace_out(extension, self.dims, self.copy_positions[-1])


def _resolve(symmetry: Optional[str], ppt: Optional[bool]) -> Tuple[str, bool]:
    return (
        settings.extension_symmetry if symmetry is None else symmetry,
        settings.ppt_extensions if ppt is None else ppt,
    )


def _tolerances(tol: Optional[float]) -> SolverTolerances:
    return SolverTolerances() if tol is None else SolverTolerances(feasibility=tol)


def sym_ext_feasible(
    state: np.ndarray,
    copies: int,
    side: Side = "A",
    symmetry: Optional[Symmetry] = None,
    ppt: Optional[bool] = None,
    tol: Optional[float] = None,
) -> Tuple[bool, ConicCertificate]:
    """Whether the two-qubit state has a symmetric extension to `copies` copies of `side`."""
    state = require_density(state)
    if state.shape != (4, 4):
        raise DimensionMismatch(f"symmetric extensions are built for two-qubit states, got dimension {state.shape[0]}")
    symmetry, ppt = _resolve(symmetry, ppt)
    ext = ExtensionClass(side=side, copies=copies, symmetry=symmetry, ppt=ppt)
    problem = ConicProblem(
        blocks=ext.blocks(),
        equalities=(Equality(label="marginal", target=state, terms=ext.reduction_terms()),) + tuple(ext.constraints()),
        name=f"sym-ext-{side}-{copies}",
    )
    certificate = conic.solve(problem, _tolerances(tol))
    logger.debug("sym_ext_feasible(side={}, copies={}, {}): {}", side, copies, symmetry, certificate.status.value)
    return certificate.feasible, certificate


def parse_classes(
    classes: Iterable[str],
    n_bob: Optional[int] = None,
    symmetry: Optional[Symmetry] = None,
    ppt: Optional[bool] = None,
) -> List[Tuple[str, Optional[ExtensionClass]]]:
    """Class tags paired with their extension cone (None for the noisy Bell dictionary)."""
    symmetry, ppt = _resolve(symmetry, ppt)
    parsed = []
    for tag in classes:
        if tag == NOISY_BELL:
            parsed.append((tag, None))
        elif tag == SYM_EXT_A:
            parsed.append((tag, ExtensionClass("A", 3, symmetry, ppt, prefix="ext_a")))
        elif tag == SYM_EXT_B or tag.startswith(SYM_EXT_B + "_"):
            copies = _bob_copies(tag, n_bob)
            ext = ExtensionClass("B", copies, symmetry, ppt, prefix="ext_b")
            parsed.append((ext.tag, ext))
        else:
            raise UnknownClass(f"unknown class {tag!r}; known: {NOISY_BELL}, {SYM_EXT_A}, {SYM_EXT_B}_<n>")
    if not parsed:
        raise UnknownClass("at least one class is required")
    return parsed


def _bob_copies(tag: str, n_bob: Optional[int]) -> int:
    if tag == SYM_EXT_B:
        if n_bob is None:
            raise UnknownClass(f"class {SYM_EXT_B} needs n_bob")
        return n_bob
    try:
        copies = int(tag[len(SYM_EXT_B) + 1:]) + 1
    except ValueError:
        raise UnknownClass(f"unknown class {tag!r}")
    if n_bob is not None and n_bob != copies:
        raise UnknownClass(f"class {tag!r} conflicts with n_bob = {n_bob}")
    return copies


def lhv_decompose(
    target: StateFamilyPoint,
    classes: Iterable[str] = DEFAULT_CLASSES,
    n_bob: Optional[int] = None,
    robust: bool = False,
    symmetry: Optional[Symmetry] = None,
    ppt: Optional[bool] = None,
    tol: Optional[float] = None,
) -> DecompositionResult:
    """Convex decomposition of the target into the given classes.

    With `robust` the noise parameter of the target is a variable and the largest
    decomposable value is returned in `lam`.
    """
    parsed = parse_classes(classes, n_bob, symmetry, ppt)
    blocks: List[Block] = []
    scalars: List[Scalar] = []
    equalities: List[Equality] = []
    terms: List[Term] = []
    scalar_terms: List[ScalarTerm] = []
    dictionary: List[np.ndarray] = []
    for tag, ext in parsed:
        if ext is None:
            dictionary = noisy_bell_dictionary(target.unitary)
            for i, element in enumerate(dictionary):
                scalars.append(Scalar(f"q_{i}", lower=0.0))
                scalar_terms.append(ScalarTerm(f"q_{i}", element))
        else:
            blocks.extend(ext.blocks())
            equalities.extend(ext.constraints())
            terms.extend(ext.reduction_terms())

    if robust:
        scalars.append(Scalar(NOISE_SCALAR, lower=0.0, upper=1.0))
        scalar_terms.append(ScalarTerm(NOISE_SCALAR, -(target.pure - target.noise)))
        main = Equality(label="target", target=target.noise, terms=tuple(terms), scalar_terms=tuple(scalar_terms))
    else:
        main = Equality(label="target", target=target.state, terms=tuple(terms), scalar_terms=tuple(scalar_terms))
    problem = ConicProblem(
        blocks=tuple(blocks),
        equalities=(main,) + tuple(equalities),
        scalars=tuple(scalars),
        objective={NOISE_SCALAR: 1.0} if robust else None,
        name="lhv-robust" if robust else "lhv",
    )
    certificate = conic.solve(problem, _tolerances(tol))
    if not certificate.feasible:
        return DecompositionResult(feasible=False, components=[], residual=float("nan"), certificate=certificate)

    lam = float(np.clip(certificate.scalars[NOISE_SCALAR], 0.0, 1.0)) if robust else target.lam
    components = _components(parsed, dictionary, certificate)
    reconstructed = lam * target.pure + (1 - lam) * target.noise
    rebuilt = sum(c.weight * c.operator for c in components)
    residual = float(np.max(np.abs(rebuilt - reconstructed)))
    if residual > 1e-7:
        raise NumericalFailure(f"decomposition reconstructs the target only to {residual:.2e}")
    logger.debug("lhv_decompose(s={:.4f}, lambda={:.6f}): weights {}", target.s, lam, [c.weight for c in components])
    return DecompositionResult(feasible=True, components=components, residual=residual, certificate=certificate, lam=lam)


def _components(parsed, dictionary, certificate: ConicCertificate) -> List[DecompositionComponent]:
    raw = []
    for tag, ext in parsed:
        if ext is None:
            q = np.clip([certificate.scalars[f"q_{i}"] for i in range(len(dictionary))], 0.0, None)
            operator = np.tensordot(q, np.array(dictionary), axes=1)
            raw.append((tag, operator, None))
        else:
            raw.append((tag, ext.marginal(certificate.blocks), ext.extension(certificate.blocks)))
    total = sum(float(np.trace(op).real) for _, op, _ in raw)
    components = []
    for tag, operator, extension in raw:
        weight = float(np.trace(operator).real)
        if weight <= 1e-12:
            continue
        components.append(
            DecompositionComponent(
                tag=tag,
                weight=weight / total,
                operator=operator / weight,
                certificate=None if extension is None else extension / weight,
            )
        )
    return components


def ua_samples(grid: Optional[int] = None, n_random: Optional[int] = None, seed: int = 0) -> List[Angles]:
    """Euler-angle grid (alpha, gamma over [0, 2 pi), beta over [0, pi]) plus Haar-random angles."""
    grid = settings.ua_grid if grid is None else grid
    n_random = settings.ua_random if n_random is None else n_random
    turns = np.linspace(0.0, 2 * math.pi, grid, endpoint=False)
    tilts = np.linspace(0.0, math.pi, grid)
    samples = [(float(a), float(b), float(c)) for a in turns for b in tilts for c in turns]
    rng = np.random.default_rng(seed)
    for _ in range(n_random):
        alpha, gamma = rng.uniform(0.0, 2 * math.pi, size=2)
        beta = math.acos(1 - 2 * rng.uniform())
        samples.append((float(alpha), float(beta), float(gamma)))
    return samples


def lambda_max_at(
    s: float,
    angles: Sequence[float],
    classes: Sequence[str] = DEFAULT_CLASSES,
    n_bob: Optional[int] = None,
    method: Method = "direct",
    symmetry: Optional[Symmetry] = None,
    ppt: Optional[bool] = None,
) -> float:
    """Largest lam for which rho(s; U_A) decomposes into the classes."""
    if method == "direct":
        result = lhv_decompose(state_family(s, angles), classes, n_bob, robust=True, symmetry=symmetry, ppt=ppt)
        if not result.feasible:
            # no decomposition even of the fully noisy member
            logger.warning("s = {:.4f}, angles {}: no decomposition at any lambda", s, tuple(angles))
            return 0.0
        return result.lam
    if method == "bisection":
        lam, _ = bisect_threshold(
            lambda lam: lhv_decompose(state_family(s, angles, lam), classes, n_bob, symmetry=symmetry, ppt=ppt).feasible,
            settings.lhv_bisection_width,
        )
        return lam
    raise RangeError(f"unknown scan method {method!r}")


def scan_lambda_max(
    s_grid: Sequence[float],
    samples: Optional[Sequence[Angles]] = None,
    classes: Sequence[str] = DEFAULT_CLASSES,
    n_bob: Optional[int] = None,
    method: Method = "direct",
    jobs: Optional[int] = None,
    seed: int = 0,
    symmetry: Optional[Symmetry] = None,
    ppt: Optional[bool] = None,
) -> CurveTable:
    """min over U_A of the largest decomposable lam, for every s.

    Tasks run on a process pool of `jobs` workers (machine parallelism when None);
    `jobs=1` runs inline.
    """
    symmetry, ppt = _resolve(symmetry, ppt)
    tags = [tag for tag, _ in parse_classes(classes, n_bob, symmetry, ppt)]
    default_sampling = samples is None
    samples = ua_samples(seed=seed) if default_sampling else [tuple(a) for a in samples]
    tasks = [(s, angles) for s in s_grid for angles in samples]
    logger.info("lhv scan: {} values of s x {} unitaries, classes {}", len(s_grid), len(samples), tags)

    args = (list(classes), n_bob, method, symmetry, ppt)
    if jobs == 1:
        values = [lambda_max_at(s, angles, *args) for s, angles in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            futures = [executor.submit(lambda_max_at, s, angles, *args) for s, angles in tasks]
            values = [f.result() for f in futures]

    rows = []
    per_s = len(samples)
    for i, s in enumerate(s_grid):
        chunk = values[i * per_s:(i + 1) * per_s]
        worst = int(np.argmin(chunk))
        alpha, beta, gamma = samples[worst]
        rows.append(
            CurveRow(s=s, lambda_max=chunk[worst], ua_alpha=alpha, ua_beta=beta, ua_gamma=gamma, classes="+".join(tags))
        )
        logger.info("s = {:.4f}: lambda_max = {:.6f}", s, chunk[worst])
    metadata = {
        "n_unitaries": per_s,
        "seed": seed,
        "method": method,
        "symmetry": symmetry,
        "ppt": ppt,
        "noisy_bell_limit": settings.noisy_bell_limit,
        "dictionary_size": len(clifford_group()) + 2,
    }
    if default_sampling:
        metadata.update({"ua_grid": settings.ua_grid, "ua_random": settings.ua_random})
    return CurveTable(rows=rows, metadata=metadata)


CSV_COLUMNS = ("s", "lambda_max", "ua_alpha", "ua_beta", "ua_gamma", "classes")


def write_csv(table: CurveTable, stream: TextIO, digits: Optional[int] = None) -> None:
    digits = settings.sig_digits if digits is None else digits
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in table.rows:
        writer.writerow(
            [f"{getattr(row, c):.{digits}g}" for c in CSV_COLUMNS[:-1]] + [row.classes]
        )
