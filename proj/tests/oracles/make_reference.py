"""Regenerates tests/oracles/reference_values.hpp with numpy.

The inputs are small fixed matrices with hand-picked entries; the outputs are
the dense inverse and the dense A^-1 B A^-H, written out in full so the C++
tests can mask them to the pattern themselves.
"""

import numpy as np


def bta_dense(n, b, a, seed):
    rng = np.random.default_rng(seed)
    N = n * b + a
    A = np.zeros((N, N), dtype=complex)
    pattern = np.zeros((N, N), dtype=bool)
    t = n * b
    for i in range(n):
        for j in (i - 1, i, i + 1):
            if 0 <= j < n:
                pattern[i * b:(i + 1) * b, j * b:(j + 1) * b] = True
    pattern[t:, :] = True
    pattern[:, t:] = True
    # Quarter-integer entries keep the inputs exactly representable.
    re = rng.integers(-4, 5, size=(N, N)) / 4.0
    im = rng.integers(-4, 5, size=(N, N)) / 4.0
    A[pattern] = (re + 1j * im)[pattern]
    B = np.zeros_like(A)
    re = rng.integers(-4, 5, size=(N, N)) / 4.0
    im = rng.integers(-4, 5, size=(N, N)) / 4.0
    B[pattern] = (re + 1j * im)[pattern]
    B = (B + B.conj().T) / 2
    for r in range(N):
        A[r, r] += 2.0 * (np.abs(A[r]).sum() - abs(A[r, r]) + 1.0)
    return A, B


def emit(name, M):
    vals = ",\n    ".join(f"{{{float(z.real)!r}, {float(z.imag)!r}}}" for z in M.ravel())
    return f"inline const std::vector<std::complex<double>> {name} = {{\n    {vals}}};\n"


cases = [("bt", 4, 2, 0, 11), ("bta", 3, 2, 1, 12), ("arrow_wide", 2, 1, 3, 13)]
out = [
    "// Generated by tests/oracles/make_reference.py. Do not edit.\n",
    "#pragma once\n#include <complex>\n#include <cstddef>\n#include <vector>\n\n",
    "namespace bta::reference {\n\n",
]
for tag, n, b, a, seed in cases:
    A, B = bta_dense(n, b, a, seed)
    Ai = np.linalg.inv(A)
    XB = Ai @ B @ Ai.conj().T
    out.append(f"// {tag}: n={n} b={b} a={a}\n")
    out.append(f"inline constexpr std::size_t {tag}_n = {n}, {tag}_b = {b}, {tag}_a = {a};\n")
    out.append(emit(f"{tag}_A", A))
    out.append(emit(f"{tag}_B", B))
    out.append(emit(f"{tag}_XA", Ai))
    out.append(emit(f"{tag}_XB", XB))
    out.append("\n")
out.append("}  // namespace bta::reference\n")
with open("tests/oracles/reference_values.hpp", "w") as f:
    f.write("".join(out))
