"""Random sensing operators: dense Gaussian/Rademacher and subsampled transforms.

Dense kinds draw i.i.d. entries with variance 1/m (Rademacher entries are
exactly +-1/sqrt(m)).  The structured kind samples m distinct rows of an
unnormalized fast transform (Walsh-Hadamard or DFT) applied after a random
sign flip of the input, scaled by 1/sqrt(m); it never materializes the
transform for apply/adjoint.  Every operator is reconstructible from the
tuple (kind, m, n, seed, transform), which is all experiment logs store.

DFT measurements are complex; they are returned as 2m stacked real values
(real parts then imaginary parts).  With the 1/sqrt(m) scaling this keeps
E||Ax||^2 = ||x||^2, the normalization every recovery guarantee in this
package is calibrated to, so the stacked operator drops straight into the
real-valued solvers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SensingOperator",
    "make_gaussian",
    "make_rademacher",
    "make_structured",
    "from_descriptor",
    "fwht",
]

ADJOINT_TOL = 1e-10


def fwht(x: np.ndarray) -> np.ndarray:
    """Unnormalized fast Walsh-Hadamard transform (Sylvester ordering).

    Input length must be a power of two.  fwht(fwht(x)) == n * x.
    """
    a = np.array(x, dtype=float)
    n = a.size
    if n & (n - 1):
        raise ValueError("length must be a power of 2")
    h = 1
    while h < n:
        a = a.reshape(-1, 2 * h)
        left = a[:, :h].copy()
        a[:, :h] = left + a[:, h:]
        a[:, h:] = left - a[:, h:]
        a = a.reshape(n)
        h *= 2
    return a


def _sylvester_hadamard(n: int) -> np.ndarray:
    h = np.array([[1.0]])
    while h.shape[0] < n:
        h = np.block([[h, h], [h, -h]])
    return h


@dataclass(frozen=True)
class SensingOperator:
    """Measurement map with apply/adjoint and an optional dense materialization.

    For the dft transform the output dimension is 2m (stacked real and
    imaginary parts); everywhere else it is m.
    """

    kind: str
    m: int
    n: int
    seed: int
    transform: str | None = None
    dense_entries: np.ndarray | None = field(default=None, repr=False)
    sample_indices: np.ndarray | None = field(default=None, repr=False)
    sign_flips: np.ndarray | None = field(default=None, repr=False)

    @property
    def out_dim(self) -> int:
        return 2 * self.m if self.transform == "dft" else self.m

    def descriptor(self) -> dict:
        """Reconstruction tuple; experiment logs store this, never entries."""
        return {
            "kind": self.kind,
            "m": self.m,
            "n": self.n,
            "seed": self.seed,
            "transform": self.transform,
        }

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"expected input of shape ({self.n},)")
        if self.kind in ("gaussian", "rademacher"):
            return self.dense_entries @ x
        flipped = self.sign_flips * x
        root_m = np.sqrt(self.m)
        if self.transform == "walsh_hadamard":
            return fwht(flipped)[self.sample_indices] / root_m
        spectrum = np.fft.fft(flipped)[self.sample_indices] / root_m
        return np.concatenate([spectrum.real, spectrum.imag])

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if y.shape != (self.out_dim,):
            raise ValueError(f"expected input of shape ({self.out_dim},)")
        if self.kind in ("gaussian", "rademacher"):
            return self.dense_entries.T @ y
        root_m = np.sqrt(self.m)
        if self.transform == "walsh_hadamard":
            scattered = np.zeros(self.n)
            scattered[self.sample_indices] = y
            return self.sign_flips * fwht(scattered) / root_m
        scattered = np.zeros(self.n, dtype=complex)
        scattered[self.sample_indices] = y[: self.m] + 1j * y[self.m :]
        # conjugate-transpose of the unnormalized DFT is n * ifft
        return self.sign_flips * np.real(self.n * np.fft.ifft(scattered)) / root_m

    def materialize(self) -> np.ndarray:
        """Dense matrix equal to apply (out_dim-by-n); built without fwht/fft."""
        if self.kind in ("gaussian", "rademacher"):
            return self.dense_entries.copy()
        root_m = np.sqrt(self.m)
        if self.transform == "walsh_hadamard":
            rows = _sylvester_hadamard(self.n)[self.sample_indices]
            return rows * self.sign_flips / root_m
        grid = np.outer(self.sample_indices, np.arange(self.n))
        rows = np.exp(-2j * np.pi * grid / self.n) * self.sign_flips / root_m
        return np.vstack([rows.real, rows.imag])

    def columns(self, indices: np.ndarray) -> np.ndarray:
        """Measurement image of the requested standard basis vectors."""
        indices = np.asarray(indices, dtype=int)
        if self.kind in ("gaussian", "rademacher"):
            return self.dense_entries[:, indices].copy()
        out = np.empty((self.out_dim, indices.size))
        basis = np.zeros(self.n)
        for k, j in enumerate(indices):
            basis[j] = 1.0
            out[:, k] = self.apply(basis)
            basis[j] = 0.0
        return out


def make_gaussian(m: int, n: int, seed: int) -> SensingOperator:
    """Dense operator with i.i.d. N(0, 1/m) entries; deterministic under seed."""
    _check_dims(m, n)
    rng = np.random.default_rng(seed)
    entries = rng.standard_normal((m, n)) / np.sqrt(m)
    entries.setflags(write=False)
    return SensingOperator(kind="gaussian", m=m, n=n, seed=seed, dense_entries=entries)


def make_rademacher(m: int, n: int, seed: int) -> SensingOperator:
    """Dense operator with entries exactly +-1/sqrt(m), equiprobable."""
    _check_dims(m, n)
    rng = np.random.default_rng(seed)
    entries = (rng.integers(0, 2, size=(m, n)) * 2.0 - 1.0) / np.sqrt(m)
    entries.setflags(write=False)
    return SensingOperator(kind="rademacher", m=m, n=n, seed=seed, dense_entries=entries)


def make_structured(m: int, n: int, transform: str, seed: int) -> SensingOperator:
    """Subsampled fast transform: row sampler o transform o random signs, / sqrt(m).

    transform is "walsh_hadamard" (n must be a power of 2) or "dft".  Row
    indices are drawn uniformly without replacement, so they are distinct.
    """
    _check_dims(m, n)
    if transform not in ("walsh_hadamard", "dft"):
        raise ValueError(f"unknown transform {transform!r}")
    if transform == "walsh_hadamard" and n & (n - 1):
        raise ValueError("walsh_hadamard requires n to be a power of 2")
    if m > n:
        raise ValueError("structured sampling requires m <= n")
    rng = np.random.default_rng(seed)
    indices = np.sort(rng.choice(n, size=m, replace=False))
    flips = rng.integers(0, 2, size=n) * 2.0 - 1.0
    indices.setflags(write=False)
    flips.setflags(write=False)
    return SensingOperator(
        kind="structured",
        m=m,
        n=n,
        seed=seed,
        transform=transform,
        sample_indices=indices,
        sign_flips=flips,
    )


def from_descriptor(desc: dict) -> SensingOperator:
    """Rebuild an operator from the tuple stored in experiment logs."""
    kind = desc["kind"]
    if kind == "gaussian":
        return make_gaussian(desc["m"], desc["n"], desc["seed"])
    if kind == "rademacher":
        return make_rademacher(desc["m"], desc["n"], desc["seed"])
    if kind == "structured":
        return make_structured(desc["m"], desc["n"], desc["transform"], desc["seed"])
    raise ValueError(f"unknown operator kind {kind!r}")


def _check_dims(m: int, n: int) -> None:
    if m < 1 or n < 1:
        raise ValueError("m and n must be >= 1")
