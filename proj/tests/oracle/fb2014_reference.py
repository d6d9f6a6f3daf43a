#!/usr/bin/env python3
"""Step-by-step reference composition of the fb2014 chain.

Independent of the C++ pipeline: scrypt is a pure-Python implementation
checked against the RFC 7914 vectors, and HMAC comes from the stdlib hmac
module. Prints the golden values frozen into tests/unit/test_chain.cpp and
tests/unit/test_migration.cpp.
"""
import hashlib
import hmac
import struct


def _salsa20_8(b):
    x = list(struct.unpack("<16I", b))
    inp = x[:]

    def r(a, s):
        a &= 0xFFFFFFFF
        return ((a << s) | (a >> (32 - s))) & 0xFFFFFFFF

    for _ in range(4):
        x[4] ^= r(x[0] + x[12], 7); x[8] ^= r(x[4] + x[0], 9)
        x[12] ^= r(x[8] + x[4], 13); x[0] ^= r(x[12] + x[8], 18)
        x[9] ^= r(x[5] + x[1], 7); x[13] ^= r(x[9] + x[5], 9)
        x[1] ^= r(x[13] + x[9], 13); x[5] ^= r(x[1] + x[13], 18)
        x[14] ^= r(x[10] + x[6], 7); x[2] ^= r(x[14] + x[10], 9)
        x[6] ^= r(x[2] + x[14], 13); x[10] ^= r(x[6] + x[2], 18)
        x[3] ^= r(x[15] + x[11], 7); x[7] ^= r(x[3] + x[15], 9)
        x[11] ^= r(x[7] + x[3], 13); x[15] ^= r(x[11] + x[7], 18)
        x[1] ^= r(x[0] + x[3], 7); x[2] ^= r(x[1] + x[0], 9)
        x[3] ^= r(x[2] + x[1], 13); x[0] ^= r(x[3] + x[2], 18)
        x[6] ^= r(x[5] + x[4], 7); x[7] ^= r(x[6] + x[5], 9)
        x[4] ^= r(x[7] + x[6], 13); x[5] ^= r(x[4] + x[7], 18)
        x[11] ^= r(x[10] + x[9], 7); x[8] ^= r(x[11] + x[10], 9)
        x[9] ^= r(x[8] + x[11], 13); x[10] ^= r(x[9] + x[8], 18)
        x[12] ^= r(x[15] + x[14], 7); x[13] ^= r(x[12] + x[15], 9)
        x[14] ^= r(x[13] + x[12], 13); x[15] ^= r(x[14] + x[13], 18)
    return struct.pack("<16I", *[(a + b) & 0xFFFFFFFF for a, b in zip(x, inp)])


def _xor(a, b):
    return bytes(i ^ j for i, j in zip(a, b))


def _block_mix(b, r):
    x = b[(2 * r - 1) * 64:]
    ys = []
    for i in range(2 * r):
        x = _salsa20_8(_xor(x, b[i * 64:(i + 1) * 64]))
        ys.append(x)
    return b"".join(ys[0::2] + ys[1::2])


def _ro_mix(b, n, r):
    x = b
    v = []
    for _ in range(n):
        v.append(x)
        x = _block_mix(x, r)
    for _ in range(n):
        j = struct.unpack("<I", x[(2 * r - 1) * 64:(2 * r - 1) * 64 + 4])[0] % n
        x = _block_mix(_xor(x, v[j]), r)
    return x


def scrypt(pw, salt, n, r, p, dk_len):
    b = hashlib.pbkdf2_hmac("sha256", pw, salt, 1, p * 128 * r)
    out = b"".join(_ro_mix(b[i * 128 * r:(i + 1) * 128 * r], n, r) for i in range(p))
    return hashlib.pbkdf2_hmac("sha256", pw, out, 1, dk_len)


def fb2014_from_m(m, sha1_salt, scrypt_salt, pepper, n=1 << 14):
    s1 = hashlib.sha1(sha1_salt + m.hex().encode()).digest()
    s2 = hmac.new(pepper, s1.hex().encode(), hashlib.sha256).digest()
    s3 = scrypt(s2.hex().encode(), scrypt_salt, n, 8, 1, 64)
    value = hashlib.sha256(s3.hex().encode()).digest()
    return s1, s2, s3, value


def fb2014(pw, sha1_salt, scrypt_salt, pepper, n=1 << 14):
    m = hashlib.md5(pw).digest()
    return (m,) + fb2014_from_m(m, sha1_salt, scrypt_salt, pepper, n)


if __name__ == "__main__":
    assert scrypt(b"", b"", 16, 1, 1, 64).hex().startswith("77d6576238657b20")
    assert scrypt(b"password", b"NaCl", 1024, 8, 16, 64).hex().startswith("fdbabe1c9d347200")
    z20, z32 = bytes(20), bytes(32)
    for name, n in (("n=2^14", 1 << 14), ("n=2^4", 16)):
        for pw in (b"hunter2", b"abc"):
            trace = fb2014(pw, z20, z32, z32, n)
            print(name, pw.decode(), [t.hex() for t in trace])
    # Patterned salts/pepper catch swapped-argument mistakes that all-zero inputs hide.
    s1 = bytes(range(20)); s2 = bytes(range(100, 132)); pep = bytes(range(200, 232))
    for name, n in (("n=2^14", 1 << 14), ("n=2^4", 16)):
        print(name, "patterned hunter2", fb2014(b"hunter2", s1, s2, pep, n)[-1].hex())
