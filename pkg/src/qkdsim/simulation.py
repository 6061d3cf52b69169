"""Exact finite-block simulation of the key-distribution pipeline.

One run of the pipeline: a uniform key K_A selects a codeword, each letter
is encoded and sent through the channel, the receiver measures the whole
block with a collective POVM (the pretty-good measurement over codeword
block states) while the adversary measures slot by slot with a factorized
POVM and post-processes outcomes through a classical decoding function.
The joint distribution of (K_A, K_B, K_E) is computed exactly by
enumerating all outcome tuples; there is no Monte Carlo anywhere, so
agreement probability and adversary information are sharp numbers and runs
are bit-identical for fixed seeds.
"""

from __future__ import annotations

import dataclasses
import itertools
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
from scipy import optimize as sciopt

from .channels import (
    DEFAULT_DIM_BUDGET,
    Codeword,
    CqEnsemble,
    QuantumChannel,
    apply,
    marginal,
    push_through,
    tensor_power,
)
from .errors import BudgetExceeded, DimensionMismatch, ValidationError
from .information import (
    OptimizerConfig,
    _mi_from_probs,
    _normalize_vectors,
    _probs_from_vectors,
)
from .measurements import (
    FactorizedPovm,
    Povm,
    expand,
    helstrom,
    pretty_good_measurement,
    random_rank1_povm,
)
from .states import DensityOperator, hermitian_eigensystem, permute_factors

_LBFGS_MAX_ITERS = 200


@dataclass(frozen=True)
class Scenario:
    """The fixed part of a key-distribution system.

    ``key_count`` keys are encoded into length-``n`` codewords over the
    ensemble alphabet; ``theta`` maps each transmitted letter state into
    the receiver/adversary pair space (its output factorization gives the
    B/E split).
    """

    name: str
    key_count: int
    ensemble: CqEnsemble
    theta: QuantumChannel
    n: int = 1
    budget: int = DEFAULT_DIM_BUDGET
    classical_pair: tuple | None = None

    def __post_init__(self):
        if self.key_count < 2:
            raise ValidationError("key-count", f"need at least 2 keys, got {self.key_count}")
        if self.ensemble.dim != self.theta.in_dim:
            raise DimensionMismatch(
                f"ensemble dim {self.ensemble.dim} != channel input dim {self.theta.in_dim}"
            )
        if self.theta.out_factorization is None or len(self.theta.out_factorization) != 2:
            raise ValidationError(
                "output-factorization",
                "scenario channel needs a two-factor output (receiver/adversary split)",
            )
        if self.n < 1:
            raise ValidationError("block-length", f"n must be >= 1, got {self.n}")
        total = self.theta.out_dim**self.n
        if total > self.budget:
            raise BudgetExceeded(total, self.budget, f"scenario block length n={self.n}")

    @property
    def dim_b(self) -> int:
        return self.theta.out_factorization.dims[0]

    @property
    def dim_e(self) -> int:
        return self.theta.out_factorization.dims[1]

    def with_n(self, n: int) -> "Scenario":
        return dataclasses.replace(self, n=int(n))

    def eve_ensemble(self) -> CqEnsemble:
        """Single-letter ensemble seen by the adversary."""
        return push_through(self.ensemble, marginal(self.theta, "E"))

    def bob_ensemble(self) -> CqEnsemble:
        """Single-letter ensemble seen by the receiver."""
        return push_through(self.ensemble, marginal(self.theta, "B"))


@dataclass(frozen=True)
class Codebook:
    """One codeword per key, all of equal length."""

    words: tuple[Codeword, ...]

    def __post_init__(self):
        words = tuple(
            w if isinstance(w, Codeword) else Codeword(tuple(w)) for w in self.words
        )
        object.__setattr__(self, "words", words)
        if len(words) < 2:
            raise ValidationError("codebook", "need at least 2 codewords")
        n = len(words[0])
        if any(len(w) != n for w in words):
            raise ValidationError("codebook", "codewords must share one length")

    @property
    def length(self) -> int:
        return len(self.words[0])

    def __len__(self) -> int:
        return len(self.words)


def sample_codebook(key_count: int, n: int, alphabet_size: int, seed: int) -> Codebook:
    """Random coder realization: i.i.d. uniform letters, reproducible by seed."""
    if key_count < 2:
        raise ValidationError("key-count", f"need at least 2 keys, got {key_count}")
    rng = np.random.default_rng(seed)
    letters = rng.integers(0, alphabet_size, size=(key_count, n))
    return Codebook(tuple(Codeword(tuple(row)) for row in letters))


def repetition_codebook(key_count: int, n: int) -> Codebook:
    """Deterministic coder sending letter k for key k, n times."""
    return Codebook(tuple(Codeword((k,) * n) for k in range(key_count)))


class EveStrategy:
    """A factorized attack: per-slot POVMs plus a classical decoder.

    Membership in the individual-attack class holds by construction: the
    flat measurement is the coarse-graining of the expanded slot product
    under ``decoder``.
    """

    __slots__ = ("slots", "decoder", "descriptor")

    def __init__(self, slots: FactorizedPovm, decoder: dict, descriptor: str = "custom"):
        if not isinstance(slots, FactorizedPovm):
            raise ValidationError("slots", "slots must be a FactorizedPovm")
        decoder = dict(decoder)
        for combo in itertools.product(*(s.outcomes for s in slots.slots)):
            if combo not in decoder:
                raise ValidationError("decoder-total", f"decoder misses outcome tuple {combo}")
        self.slots = slots
        self.decoder = decoder
        self.descriptor = descriptor

    @property
    def n(self) -> int:
        return len(self.slots)


@dataclass
class KeySimReport:
    """Exact joint distribution of (K_A, K_B, K_E) and its summaries."""

    joint: np.ndarray
    p_agree: float
    bob_info: float
    eve_info: float
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        total = float(self.joint.sum())
        if abs(total - 1.0) > 1e-9:
            raise ValidationError("joint-normalization", f"joint sums to {total!r}")
        k = self.joint.shape[0]
        alice = self.joint.sum(axis=(1, 2))
        if float(np.abs(alice - 1.0 / k).max()) > 1e-10:
            raise ValidationError("alice-marginal", "key marginal is not uniform")


@dataclass
class SweepCell:
    """One (n, seed) cell of a sweep; failed cells carry an error marker."""

    scenario: str
    n: int
    seed: int
    coder: str
    eve: str
    report: KeySimReport | None = None
    error: str | None = None


def _letter_outputs(s: Scenario) -> list[np.ndarray]:
    """Channel output tau_a for each letter, as raw matrices."""
    return [apply(s.theta, rho).matrix for rho in s.ensemble.states]


def _block_state(s: Scenario, word: Codeword) -> np.ndarray:
    taus = _letter_outputs(s)
    for a in word.letters:
        if a < 0 or a >= s.ensemble.size:
            raise ValidationError("letter", f"letter {a} not in alphabet of size {s.ensemble.size}")
    return reduce(np.kron, (taus[a] for a in word.letters))


def bob_decoder(s: Scenario, c: Codebook) -> Povm:
    """Pretty-good measurement over the receiver's codeword block states.

    Effects live on the receiver block space and are entangled across
    slots in general; outcomes are the keys 0..K-1.
    """
    if c.length != s.n:
        raise DimensionMismatch(f"codebook length {c.length} != scenario block length {s.n}")
    tensor_power(s.theta, s.n, budget=s.budget)  # budget check (fails fast)
    d_b, d_e = s.dim_b, s.dim_e
    n = s.n
    dims = (d_b, d_e) * n
    perm = list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2))
    block_states = []
    for word in c.words:
        sigma = _block_state(s, word)
        sigma = permute_factors(sigma, dims, perm)
        t = sigma.reshape(d_b**n, d_e**n, d_b**n, d_e**n)
        block_states.append(DensityOperator(np.einsum("aebe->ab", t)))
    priors = np.full(len(c), 1.0 / len(c))
    return pretty_good_measurement(block_states, priors)


def _eve_slot_states(s: Scenario) -> np.ndarray:
    return np.stack([rho.matrix for rho in s.eve_ensemble().states])


def _slot_channels(slots: FactorizedPovm, eve_states: np.ndarray) -> list[np.ndarray]:
    """Per-slot outcome-by-letter probability tables."""
    tables = []
    for povm in slots.slots:
        eff = np.stack(povm.effects)
        tables.append(np.clip(np.einsum("eij,aji->ea", eff, eve_states).real, 0.0, None))
    return tables


def _tuple_probs(tables: list[np.ndarray], word: Codeword) -> np.ndarray:
    """P(outcome tuple | codeword), flattened in lexicographic order."""
    cols = [t[:, a] for t, a in zip(tables, word.letters)]
    return reduce(np.multiply.outer, cols).ravel()


def _ml_decoder(
    tables: list[np.ndarray], c: Codebook, slots: FactorizedPovm
) -> dict[tuple, int]:
    """Maximum-likelihood decoding of outcome tuples to keys (lowest index wins)."""
    per_key = np.stack([_tuple_probs(tables, w) for w in c.words])
    best = np.argmax(per_key, axis=0)
    combos = list(itertools.product(*(p.outcomes for p in slots.slots)))
    return {combo: int(k) for combo, k in zip(combos, best)}


def _eve_key_channel(
    tables: list[np.ndarray], c: Codebook, decoder_idx: np.ndarray, key_count: int
) -> np.ndarray:
    """P(K_E | K_A) for a factorized strategy, via exact tuple enumeration."""
    rows = []
    for w in c.words:
        flat = _tuple_probs(tables, w)
        rows.append(np.bincount(decoder_idx, weights=flat, minlength=key_count))
    return np.stack(rows)


def _decoder_index_array(me: EveStrategy, key_count: int) -> np.ndarray:
    combos = list(itertools.product(*(p.outcomes for p in me.slots.slots)))
    idx = np.array([me.decoder[combo] for combo in combos], dtype=int)
    if idx.min() < 0 or idx.max() >= key_count:
        raise ValidationError("decoder-range", "decoder maps outside the key set")
    return idx


def eve_default_strategy(s: Scenario, c: Codebook) -> EveStrategy:
    """Baseline attack: per-slot binary discrimination plus ML decoding.

    Each slot measures the adversary's single-letter ensemble with the
    Helstrom measurement (pretty-good measurement for non-binary
    alphabets); the decoder is maximum likelihood for the codebook, ties
    going to the lowest key index.
    """
    ee = s.eve_ensemble()
    if ee.size == 2:
        slot = helstrom(ee.states[0], ee.states[1], float(ee.prior[0]))
        label = "helstrom"
    else:
        slot = pretty_good_measurement(ee.states, ee.prior)
        label = "pgm"
    slots = FactorizedPovm([slot] * s.n)
    tables = _slot_channels(slots, _eve_slot_states(s))
    decoder = _ml_decoder(tables, c, slots)
    return EveStrategy(slots, decoder, descriptor=f"default({label}+ml)")


def _strategy_info(
    tables: list[np.ndarray], c: Codebook, decoder_idx: np.ndarray, key_count: int
) -> float:
    chan = _eve_key_channel(tables, c, decoder_idx, key_count)
    prior = np.full(key_count, 1.0 / key_count)
    return _mi_from_probs(prior, chan)


def eve_optimize(
    s: Scenario, c: Codebook, cfg: OptimizerConfig, eve_outcomes: int | None = None
) -> EveStrategy:
    """Best factorized attack found by a per-slot seesaw.

    Alternates quasi-Newton ascent over each slot's POVM (decoder fixed)
    with maximum-likelihood re-derivation of the decoder. ``cfg.restarts``
    counts seesaw starts: 0 returns the default strategy untouched, start 0
    refines the default and further starts are random per-slot POVMs. The
    best strategy by adversary information is returned, so the result never
    falls below the default. ``eve_outcomes`` sets the per-slot outcome
    alphabet size for random starts (default dim^2, which suffices for
    rank-one optima).
    """
    default = eve_default_strategy(s, c)
    eve_states = _eve_slot_states(s)
    key_count = len(c)
    d_e = s.dim_e
    n_out = eve_outcomes if eve_outcomes is not None else d_e * d_e

    def info_of(slots: FactorizedPovm, decoder: dict) -> float:
        tables = _slot_channels(slots, eve_states)
        combos = list(itertools.product(*(p.outcomes for p in slots.slots)))
        idx = np.array([decoder[combo] for combo in combos], dtype=int)
        return _strategy_info(tables, c, idx, key_count)

    if cfg.restarts == 0:
        return default
    best_info = info_of(default.slots, default.decoder)
    best = (best_info, default.slots, default.decoder)
    rng = np.random.default_rng(cfg.seed)
    for restart in range(cfg.restarts):
        if restart == 0:
            slot_povms = list(default.slots.slots)
        else:
            slot_povms = [random_rank1_povm(d_e, n_out, rng) for _ in range(s.n)]
        slots = FactorizedPovm(slot_povms)
        tables = _slot_channels(slots, eve_states)
        decoder = _ml_decoder(tables, c, slots)
        idx = _decoder_index_array(EveStrategy(slots, decoder), key_count)
        val = _strategy_info(tables, c, idx, key_count)
        if val > best[0]:
            best = (val, slots, dict(decoder))
        for _ in range(cfg.max_iters):
            improved = False
            for i in range(s.n):
                new_povm, new_val = _refine_slot(
                    slot_povms, i, tables, c, idx, key_count, eve_states
                )
                if new_val > val + cfg.tol:
                    slot_povms[i] = new_povm
                    tables = _slot_channels(FactorizedPovm(slot_povms), eve_states)
                    val = new_val
                    improved = True
            slots = FactorizedPovm(slot_povms)
            decoder = _ml_decoder(tables, c, slots)
            idx = _decoder_index_array(EveStrategy(slots, decoder), key_count)
            ml_val = _strategy_info(tables, c, idx, key_count)
            if ml_val > val:
                val = ml_val
                improved = True
            if val > best[0]:
                best = (val, slots, dict(decoder))
            if not improved:
                break
    _, slots, decoder = best
    descriptor = f"optimized(restarts={cfg.restarts},seed={cfg.seed})"
    return EveStrategy(slots, decoder, descriptor=descriptor)


def _refine_slot(
    slot_povms: list[Povm],
    i: int,
    tables: list[np.ndarray],
    c: Codebook,
    decoder_idx: np.ndarray,
    key_count: int,
    eve_states: np.ndarray,
) -> tuple[Povm, float]:
    """Ascent over slot i's POVM with all other slots and the decoder fixed.

    The slot's outcome count must not change (the decoder is defined on the
    current outcome tuples), so effects are parametrized as grouped
    rank-one pieces and reassembled per outcome.
    """
    d_e = eve_states.shape[1]
    povm_i = slot_povms[i]
    m = len(povm_i)
    vecs, groups = [], []
    for b, effect in enumerate(povm_i.effects):
        vals, basis = hermitian_eigensystem(effect)
        added = False
        for lam, v in zip(vals, basis.T):
            if lam > 1e-12:
                vecs.append(np.sqrt(lam) * v)
                groups.append(b)
                added = True
        if not added:
            vecs.append(np.zeros(d_e, dtype=complex))
            groups.append(b)
    w0 = np.stack(vecs)
    groups = np.array(groups)

    def table_from(w: np.ndarray) -> np.ndarray | None:
        u = _normalize_vectors(w)
        if u is None:
            return None
        probs = _probs_from_vectors(u, eve_states)
        table = np.zeros((m, probs.shape[0]))
        np.add.at(table, groups, probs.T)
        return table

    def value_with_table(table_i: np.ndarray) -> float:
        tabs = list(tables)
        tabs[i] = table_i
        return _strategy_info(tabs, c, decoder_idx, key_count)

    def objective(x: np.ndarray) -> float:
        w = (x[: x.size // 2] + 1j * x[x.size // 2 :]).reshape(-1, d_e)
        table = table_from(w)
        if table is None:
            return 50.0
        return -value_with_table(table)

    x0 = np.concatenate([w0.real.ravel(), w0.imag.ravel()])
    res = sciopt.minimize(
        objective, x0, method="L-BFGS-B", options={"maxiter": _LBFGS_MAX_ITERS, "ftol": 1e-12}
    )
    start_val = value_with_table(tables[i])
    w = (res.x[: res.x.size // 2] + 1j * res.x[res.x.size // 2 :]).reshape(-1, d_e)
    u = _normalize_vectors(w)
    if u is None:
        return povm_i, start_val
    effects = [np.zeros((d_e, d_e), dtype=complex) for _ in range(m)]
    for g, v in zip(groups, u):
        effects[g] = effects[g] + np.outer(v, v.conj())
    try:
        povm = Povm(effects, outcomes=povm_i.outcomes)
    except ValidationError:
        return povm_i, start_val
    eff = np.stack(povm.effects)
    table = np.clip(np.einsum("eij,aji->ea", eff, eve_states).real, 0.0, None)
    val = value_with_table(table)
    if val > start_val:
        return povm, val
    return povm_i, start_val


def evaluate(
    s: Scenario, c: Codebook, mb: Povm, me: EveStrategy, metadata: dict | None = None
) -> KeySimReport:
    """Exact joint distribution of the pipeline for the given strategies.

    For each key the transmitted block state is contracted against the
    receiver's block effect, leaving a conditional operator on the
    adversary block space whose Born probabilities against the expanded
    factorized POVM enumerate all outcome tuples exactly.
    """
    k = s.key_count
    if len(c) != k:
        raise DimensionMismatch(f"codebook has {len(c)} words for {k} keys")
    if c.length != s.n:
        raise DimensionMismatch(f"codebook length {c.length} != block length {s.n}")
    d_b, d_e, n = s.dim_b, s.dim_e, s.n
    if mb.dim != d_b**n:
        raise DimensionMismatch(f"receiver POVM dim {mb.dim} != block dim {d_b**n}")
    if len(mb) != k or set(mb.outcomes) != set(range(k)):
        raise ValidationError("bob-outcomes", "receiver POVM outcomes must be the key set")
    if me.n != n:
        raise DimensionMismatch(f"adversary strategy has {me.n} slots for block length {n}")
    if any(p.dim != d_e for p in me.slots.slots):
        raise DimensionMismatch("adversary slot POVMs must act on the adversary letter space")
    decoder_idx = _decoder_index_array(me, k)

    eve_expanded = np.stack(expand(me.slots, budget=s.budget).effects)
    dims = (d_b, d_e) * n
    perm = list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2))
    bob_order = {b: j for j, b in enumerate(mb.outcomes)}

    joint = np.zeros((k, k, k))
    for key, word in enumerate(c.words):
        sigma = permute_factors(_block_state(s, word), dims, perm)
        sig4 = sigma.reshape(d_b**n, d_e**n, d_b**n, d_e**n)
        for b_label, effect in zip(mb.outcomes, mb.effects):
            cond = np.einsum("aebf,ba->ef", sig4, effect)
            probs = np.clip(np.einsum("mfe,ef->m", eve_expanded, cond).real, 0.0, None)
            grouped = np.bincount(decoder_idx, weights=probs, minlength=k)
            joint[key, bob_order[b_label], :] += grouped / k
    p_agree = float(sum(joint[i, i, :].sum() for i in range(k)))
    prior = np.full(k, 1.0 / k)
    bob_info = _mi_from_probs(prior, joint.sum(axis=2) * k)
    eve_info = _mi_from_probs(prior, joint.sum(axis=1) * k)
    meta = {
        "scenario": s.name,
        "n": n,
        "key_count": k,
        "eve": me.descriptor,
        "codebook": [list(w.letters) for w in c.words],
    }
    if metadata:
        meta.update(metadata)
    return KeySimReport(joint=joint, p_agree=p_agree, bob_info=bob_info, eve_info=eve_info, metadata=meta)


def sweep(
    s: Scenario,
    n_range,
    seeds,
    cfg: OptimizerConfig,
    coder: str = "repetition",
    eve: str = "default",
) -> list[SweepCell]:
    """Evaluate a grid of (block length, seed) cells.

    Cells are independent and deterministically sub-seeded; failures
    (budget, validation) become per-cell error markers instead of aborting
    the sweep. Results come back sorted by (n, seed).
    """
    cells = []
    for n, seed in sorted(itertools.product((int(x) for x in n_range), (int(x) for x in seeds))):
        cell = SweepCell(scenario=s.name, n=n, seed=seed, coder=coder, eve=eve)
        try:
            sn = s.with_n(n)
            if coder == "repetition":
                book = repetition_codebook(sn.key_count, n)
            elif coder == "random":
                book = sample_codebook(sn.key_count, n, sn.ensemble.size, seed)
            else:
                raise ValidationError("coder", f"unknown coder {coder!r}")
            sub_seed = int(np.random.SeedSequence((cfg.seed, n, seed)).generate_state(1)[0])
            sub_cfg = dataclasses.replace(cfg, seed=sub_seed)
            mb = bob_decoder(sn, book)
            if eve == "default":
                me = eve_default_strategy(sn, book)
            elif eve == "optimized":
                me = eve_optimize(sn, book, sub_cfg)
            else:
                raise ValidationError("eve", f"unknown adversary choice {eve!r}")
            cell.report = evaluate(sn, book, mb, me, metadata={"seed": seed, "coder": coder})
        except (ValidationError, BudgetExceeded, DimensionMismatch) as exc:
            cell.error = str(exc)
        cells.append(cell)
    return cells
