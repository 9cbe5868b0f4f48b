"""GF(256) arithmetic and Reed-Solomon coding, primitive polynomial 0x11D.

The field generator is alpha = 2.  Codewords are byte sequences in
descending power order (index 0 is the highest power), matching how QR
blocks lay data out.  rs_encode produces the parity bytes appended after
the data; rs_correct repairs up to floor(ecc_len/2) byte errors.
"""

from __future__ import annotations

from functools import lru_cache

from ..errors import QrsealError

MIN_ECC_LEN = 7
MAX_ECC_LEN = 30


class Uncorrectable(QrsealError):
    """More errors than the parity can repair (or a miscorrection was caught)."""


EXP = [0] * 512
LOG = [0] * 256
_x = 1
for _i in range(255):
    EXP[_i] = _x
    LOG[_x] = _i
    _x <<= 1
    if _x & 0x100:
        _x ^= 0x11D
for _i in range(255, 512):
    EXP[_i] = EXP[_i - 255]
del _x, _i


def gf_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return EXP[LOG[a] + LOG[b]]


def gf_div(a: int, b: int) -> int:
    if b == 0:
        raise ZeroDivisionError("division by zero in GF(256)")
    if a == 0:
        return 0
    return EXP[(LOG[a] - LOG[b]) % 255]


def gf_inv(a: int) -> int:
    if a == 0:
        raise ZeroDivisionError("zero has no inverse in GF(256)")
    return EXP[255 - LOG[a]]


def gf_pow(base: int, exponent: int) -> int:
    if base == 0:
        return 0 if exponent > 0 else 1
    return EXP[(LOG[base] * exponent) % 255]


def poly_eval(poly: list[int], x: int) -> int:
    """Evaluate a polynomial given in descending power order (Horner)."""
    result = 0
    for coeff in poly:
        result = gf_mul(result, x) ^ coeff
    return result


def poly_mul(p: list[int], q: list[int]) -> list[int]:
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] ^= gf_mul(a, b)
    return out


@lru_cache(maxsize=None)
def generator_poly(ecc_len: int) -> tuple[int, ...]:
    """prod_{i=0..ecc_len-1} (x - alpha^i), descending order, monic."""
    gen = [1]
    for i in range(ecc_len):
        gen = poly_mul(gen, [1, EXP[i]])
    return tuple(gen)


def _check_params(data_len: int, ecc_len: int) -> None:
    if not MIN_ECC_LEN <= ecc_len <= MAX_ECC_LEN:
        raise ValueError(f"ecc_len must be in {MIN_ECC_LEN}..{MAX_ECC_LEN}")
    if data_len < 0:
        raise ValueError("codeword shorter than its parity")
    if data_len + ecc_len > 255:
        raise ValueError("codeword longer than 255 bytes")


def rs_encode(data: bytes, ecc_len: int) -> bytes:
    """Parity bytes for `data` (remainder of polynomial long division)."""
    _check_params(len(data), ecc_len)
    gen = generator_poly(ecc_len)
    rem = [0] * ecc_len
    for b in data:
        factor = b ^ rem[0]
        rem = rem[1:] + [0]
        if factor:
            lf = LOG[factor]
            for i in range(ecc_len):
                g = gen[i + 1]
                if g:
                    rem[i] ^= EXP[lf + LOG[g]]
    return bytes(rem)


def _syndromes(codeword: bytes, ecc_len: int) -> list[int]:
    return [poly_eval(list(codeword), EXP[i]) for i in range(ecc_len)]


def _berlekamp_massey(synd: list[int]) -> list[int]:
    """Error locator polynomial, ascending order, locator[0] == 1."""
    locator = [1]
    prev = [1]
    shift = 1
    prev_disc = 1
    length = 0
    for n, _ in enumerate(synd):
        disc = synd[n]
        for i in range(1, length + 1):
            disc ^= gf_mul(locator[i], synd[n - i])
        if disc == 0:
            shift += 1
            continue
        scale = gf_div(disc, prev_disc)
        update = locator[:]
        if len(update) < len(prev) + shift:
            update += [0] * (len(prev) + shift - len(update))
        for i, c in enumerate(prev):
            update[i + shift] ^= gf_mul(scale, c)
        if 2 * length <= n:
            prev, prev_disc, length = locator, disc, n + 1 - length
            locator, shift = update, 1
        else:
            locator, shift = update, shift + 1
    return locator


def rs_correct(codeword: bytes, ecc_len: int) -> bytes:
    """Correct up to floor(ecc_len/2) byte errors; return the data part."""
    _check_params(len(codeword) - ecc_len, ecc_len)
    n = len(codeword)
    synd = _syndromes(codeword, ecc_len)
    if not any(synd):
        return codeword[:-ecc_len]

    locator = _berlekamp_massey(synd)
    num_errors = len(locator) - 1
    if num_errors > ecc_len // 2:
        raise Uncorrectable(f"{num_errors} errors exceed capacity {ecc_len // 2}")

    # Chien search: positions are powers of x in the codeword polynomial,
    # term x^p lives at byte index n-1-p.
    positions = []
    for p in range(n):
        acc = 0
        xi_inv = EXP[(255 - p) % 255]
        for i, c in enumerate(locator):
            acc ^= gf_mul(c, gf_pow(xi_inv, i))
        if acc == 0:
            positions.append(p)
    if len(positions) != num_errors:
        raise Uncorrectable("error locator roots do not match degree")

    # Forney: Omega(x) = S(x) * Lambda(x) mod x^ecc_len, ascending order.
    omega = [0] * ecc_len
    for i, s in enumerate(synd):
        for j, c in enumerate(locator):
            if i + j < ecc_len:
                omega[i + j] ^= gf_mul(s, c)
    # Formal derivative: odd-power terms survive in characteristic 2.
    deriv = [locator[i] if i % 2 == 1 else 0 for i in range(1, len(locator))]

    fixed = bytearray(codeword)
    for p in positions:
        x = EXP[p % 255]
        x_inv = gf_inv(x)
        denom = poly_eval(list(reversed(deriv)), x_inv) if deriv else 0
        if denom == 0:
            raise Uncorrectable("Forney denominator vanished")
        numer = poly_eval(list(reversed(omega)), x_inv)
        magnitude = gf_mul(x, gf_div(numer, denom))
        fixed[n - 1 - p] ^= magnitude

    if any(_syndromes(bytes(fixed), ecc_len)):
        raise Uncorrectable("correction did not clear the syndromes")
    return bytes(fixed[:-ecc_len])
