"""Sealing of the private tag behind a pluggable cipher interface.

Two schemes:

  RSA_DEMO  RSA with OAEP padding (SHA-1/MGF1), keys generated here with
            Miller-Rabin probable primes, e = 65537, d = e^-1 mod lcm(p-1, q-1).
            Randomized: sealing the same tag twice yields different bytes.
            Demonstration-grade only; 512-bit keys exist for fast tests and
            are insecure by construction.
  XOR_TEST  32-byte symmetric key, keystream = key bytes cycled.  Fully
            deterministic so cross-module golden files stay byte-exact.
            An all-zero key is the identity transform.

Key file format (binary):

  byte 0          scheme id (0x01 RSA_DEMO, 0x02 XOR_TEST)
  RSA_DEMO        two fields, each <4-byte big-endian length><big-endian int>:
                  (n, e) in a public file, (n, d) in a private file
  XOR_TEST        raw 32 key bytes

A key directory, as consumed by the CLI and the services, holds
`seal.pub`, `seal.priv`, and `mod.key` (raw modification-key bytes for
the payload whitening layer).
"""

from __future__ import annotations

import hashlib
import math
import random
import secrets
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable

from .errors import QrsealError

MILLER_RABIN_ROUNDS = 40
RSA_PUBLIC_EXPONENT = 65537
RSA_ALLOWED_BITS = (512, 1024, 2048)
XOR_KEY_LEN = 32
MOD_KEY_LEN = 32

_OAEP_HASH = hashlib.sha1
_OAEP_HLEN = 20
_LHASH = _OAEP_HASH(b"").digest()

_sysrand = secrets.SystemRandom()


class SealingError(QrsealError):
    pass


class InvalidParam(SealingError):
    pass


class InvalidInput(SealingError):
    pass


class TagTooLong(SealingError):
    pass


class DecryptError(SealingError):
    """Single failure code: wrong key and bad padding are indistinguishable."""


class KeyFileError(SealingError):
    pass


class Scheme(Enum):
    RSA_DEMO = 0x01
    XOR_TEST = 0x02


@dataclass(frozen=True)
class RsaPublicKey:
    n: int
    e: int

    @property
    def scheme(self) -> Scheme:
        return Scheme.RSA_DEMO

    @property
    def modulus_bytes(self) -> int:
        return (self.n.bit_length() + 7) // 8


@dataclass(frozen=True)
class RsaPrivateKey:
    n: int
    d: int

    @property
    def scheme(self) -> Scheme:
        return Scheme.RSA_DEMO

    @property
    def modulus_bytes(self) -> int:
        return (self.n.bit_length() + 7) // 8


@dataclass(frozen=True)
class XorKey:
    key: bytes

    @property
    def scheme(self) -> Scheme:
        return Scheme.XOR_TEST


PublicKey = RsaPublicKey | XorKey
PrivateKey = RsaPrivateKey | XorKey


@dataclass(frozen=True)
class KeyPair:
    public: PublicKey
    private: PrivateKey
    scheme: Scheme


@dataclass(frozen=True)
class CipherText:
    scheme: Scheme
    data: bytes


# ---- primality ----

def _small_primes(limit: int) -> list[int]:
    sieve = bytearray(b"\x01") * limit
    sieve[0:2] = b"\x00\x00"
    for i in range(2, int(limit**0.5) + 1):
        if sieve[i]:
            sieve[i * i :: i] = b"\x00" * len(sieve[i * i :: i])
    return [i for i in range(limit) if sieve[i]]


_SMALL_PRIMES = _small_primes(2000)


def is_probable_prime(n: int, rounds: int = MILLER_RABIN_ROUNDS,
                      rng: random.Random | None = None) -> bool:
    """Miller-Rabin with random bases."""
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n == p:
            return True
        if n % p == 0:
            return False
    rng = rng or _sysrand
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for _ in range(rounds):
        a = rng.randrange(2, n - 1)
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(r - 1):
            x = pow(x, 2, n)
            if x == n - 1:
                break
        else:
            return False
    return True


def _random_prime(bits: int, rng: random.Random) -> int:
    while True:
        cand = rng.getrandbits(bits)
        # Top two bits set so p*q lands at exactly 2*bits; force odd.
        cand |= (0b11 << (bits - 2)) | 1
        if is_probable_prime(cand, rng=rng):
            return cand


# ---- key generation ----

def generate_keypair(scheme: Scheme, bits: int = 1024,
                     rng: random.Random | None = None) -> KeyPair:
    """Generate a key pair; `bits` is ignored for XOR_TEST."""
    rng = rng or _sysrand
    if scheme is Scheme.XOR_TEST:
        key = XorKey(bytes(rng.getrandbits(8) for _ in range(XOR_KEY_LEN)))
        return KeyPair(key, key, scheme)
    if scheme is not Scheme.RSA_DEMO:
        raise InvalidParam(f"unsupported scheme {scheme!r}")
    if bits not in RSA_ALLOWED_BITS:
        raise InvalidParam(f"RSA_DEMO bits must be one of {RSA_ALLOWED_BITS}")
    half = bits // 2
    while True:
        p = _random_prime(half, rng)
        q = _random_prime(half, rng)
        if p == q:
            continue
        lam = math.lcm(p - 1, q - 1)
        if math.gcd(RSA_PUBLIC_EXPONENT, lam) != 1:
            continue
        n = p * q
        d = pow(RSA_PUBLIC_EXPONENT, -1, lam)
        return KeyPair(RsaPublicKey(n, RSA_PUBLIC_EXPONENT),
                       RsaPrivateKey(n, d), scheme)


def max_tag_len(key: PublicKey) -> int:
    """Largest sealable tag for the key (OAEP bound for RSA)."""
    if isinstance(key, XorKey):
        return 1 << 16
    return key.modulus_bytes - 2 * _OAEP_HLEN - 2


# ---- OAEP ----

def _mgf1(seed: bytes, length: int) -> bytes:
    out = bytearray()
    counter = 0
    while len(out) < length:
        out += _OAEP_HASH(seed + counter.to_bytes(4, "big")).digest()
        counter += 1
    return bytes(out[:length])


def _xor_bytes(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b))


def _oaep_encode(message: bytes, k: int, random_bytes: Callable[[int], bytes]) -> int:
    ps = bytes(k - len(message) - 2 * _OAEP_HLEN - 2)
    db = _LHASH + ps + b"\x01" + message
    seed = random_bytes(_OAEP_HLEN)
    masked_db = _xor_bytes(db, _mgf1(seed, k - _OAEP_HLEN - 1))
    masked_seed = _xor_bytes(seed, _mgf1(masked_db, _OAEP_HLEN))
    return int.from_bytes(b"\x00" + masked_seed + masked_db, "big")


def _oaep_decode(em: bytes, k: int) -> bytes:
    y, masked_seed, masked_db = em[0], em[1 : 1 + _OAEP_HLEN], em[1 + _OAEP_HLEN :]
    seed = _xor_bytes(masked_seed, _mgf1(masked_db, _OAEP_HLEN))
    db = _xor_bytes(masked_db, _mgf1(seed, k - _OAEP_HLEN - 1))
    ok = y == 0 and db[:_OAEP_HLEN] == _LHASH
    rest = db[_OAEP_HLEN:]
    sep = -1
    for i, b in enumerate(rest):
        if b == 0x01:
            sep = i
            break
        if b != 0x00:
            ok = False
            break
    if not ok or sep < 0:
        raise DecryptError("decryption failed")
    return rest[sep + 1 :]


# ---- seal / open ----

def seal(tag: bytes, key: PublicKey,
         random_bytes: Callable[[int], bytes] = secrets.token_bytes) -> CipherText:
    """Encrypt a tag under the public half."""
    if not tag:
        raise InvalidInput("tag must be non-empty")
    if isinstance(key, XorKey):
        data = bytes(b ^ key.key[i % len(key.key)] for i, b in enumerate(tag))
        return CipherText(Scheme.XOR_TEST, data)
    if isinstance(key, RsaPublicKey):
        k = key.modulus_bytes
        if len(tag) > max_tag_len(key):
            raise TagTooLong(f"tag of {len(tag)} bytes exceeds limit {max_tag_len(key)}")
        m = _oaep_encode(tag, k, random_bytes)
        return CipherText(Scheme.RSA_DEMO, pow(m, key.e, key.n).to_bytes(k, "big"))
    raise InvalidParam(f"not a public key: {type(key).__name__}")


def open(ct: CipherText, key: PrivateKey) -> bytes:  # noqa: A001 - like gzip.open
    """Decrypt a sealed tag; any failure raises the single DecryptError."""
    if isinstance(key, XorKey):
        if ct.scheme is not Scheme.XOR_TEST:
            raise DecryptError("decryption failed")
        return bytes(b ^ key.key[i % len(key.key)] for i, b in enumerate(ct.data))
    if isinstance(key, RsaPrivateKey):
        k = key.modulus_bytes
        if ct.scheme is not Scheme.RSA_DEMO or len(ct.data) != k:
            raise DecryptError("decryption failed")
        c = int.from_bytes(ct.data, "big")
        if c >= key.n:
            raise DecryptError("decryption failed")
        em = pow(c, key.d, key.n).to_bytes(k, "big")
        return _oaep_decode(em, k)
    raise DecryptError("decryption failed")


# ---- key files ----

def _dump_int(value: int) -> bytes:
    raw = value.to_bytes((value.bit_length() + 7) // 8 or 1, "big")
    return len(raw).to_bytes(4, "big") + raw


def _read_int(data: bytes, offset: int) -> tuple[int, int]:
    if offset + 4 > len(data):
        raise KeyFileError("truncated key file")
    n = int.from_bytes(data[offset : offset + 4], "big")
    if offset + 4 + n > len(data):
        raise KeyFileError("truncated key file")
    return int.from_bytes(data[offset + 4 : offset + 4 + n], "big"), offset + 4 + n


def dump_key(key: PublicKey | PrivateKey) -> bytes:
    if isinstance(key, XorKey):
        return bytes([Scheme.XOR_TEST.value]) + key.key
    if isinstance(key, RsaPublicKey):
        return bytes([Scheme.RSA_DEMO.value]) + _dump_int(key.n) + _dump_int(key.e)
    return bytes([Scheme.RSA_DEMO.value]) + _dump_int(key.n) + _dump_int(key.d)


def load_key(data: bytes, private: bool) -> PublicKey | PrivateKey:
    if not data:
        raise KeyFileError("empty key file")
    if data[0] == Scheme.XOR_TEST.value:
        if len(data) != 1 + XOR_KEY_LEN:
            raise KeyFileError("XOR_TEST key file must hold exactly 32 key bytes")
        return XorKey(data[1:])
    if data[0] == Scheme.RSA_DEMO.value:
        n, off = _read_int(data, 1)
        x, off = _read_int(data, off)
        if off != len(data):
            raise KeyFileError("trailing bytes in key file")
        return RsaPrivateKey(n, x) if private else RsaPublicKey(n, x)
    raise KeyFileError(f"unknown scheme id 0x{data[0]:02X}")


def key_id(key: PublicKey | PrivateKey) -> str:
    """Stable short identifier for referencing a key from records."""
    return hashlib.sha256(dump_key(key)).hexdigest()[:12]


# ---- key directories ----

@dataclass(frozen=True)
class KeyMaterial:
    """Everything the encode/decode pipelines need, loaded from one directory."""

    public: PublicKey
    private: PrivateKey
    mod_key: bytes

    @property
    def seal_key_id(self) -> str:
        return key_id(self.public)

    @property
    def mod_key_id(self) -> str:
        return hashlib.sha256(self.mod_key).hexdigest()[:12]


def generate_key_dir(path: str | Path, scheme: Scheme, bits: int = 1024,
                     rng: random.Random | None = None) -> KeyMaterial:
    """Provision seal.pub / seal.priv / mod.key under `path`."""
    rng = rng or _sysrand
    pair = generate_keypair(scheme, bits, rng=rng)
    mod_key = bytes(rng.getrandbits(8) for _ in range(MOD_KEY_LEN))
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    (out / "seal.pub").write_bytes(dump_key(pair.public))
    (out / "seal.priv").write_bytes(dump_key(pair.private))
    (out / "mod.key").write_bytes(mod_key)
    return KeyMaterial(pair.public, pair.private, mod_key)


def load_key_dir(path: str | Path) -> KeyMaterial:
    base = Path(path)
    try:
        public = load_key((base / "seal.pub").read_bytes(), private=False)
        private = load_key((base / "seal.priv").read_bytes(), private=True)
        mod_key = (base / "mod.key").read_bytes()
    except OSError as exc:
        raise KeyFileError(f"cannot read key directory {base}: {exc}") from exc
    if len(mod_key) < 8:
        raise KeyFileError("mod.key must hold at least 8 bytes")
    return KeyMaterial(public, private, mod_key)
