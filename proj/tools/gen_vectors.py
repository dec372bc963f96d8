# Copyright 2026 The KeyMux Authors
# SPDX-License-Identifier: Apache-2.0
#
# Regenerates the frozen test vectors embedded in tests/.  Uses independent
# implementations (hashlib, the `cryptography` package, scipy) so the C++
# code under test never validates itself.  Run: python3 tools/gen_vectors.py

import hashlib
import hmac

def hkdf_sha256(ikm: bytes, salt: bytes, info: bytes, length: int) -> bytes:
    prk = hmac.new(salt if salt else b"\x00" * 32, ikm, hashlib.sha256).digest()
    okm = b""
    t = b""
    i = 1
    while len(okm) < length:
        t = hmac.new(prk, t + info + bytes([i]), hashlib.sha256).digest()
        okm += t
        i += 1
    return okm[:length]

def show(name, value):
    print(f"{name} = {value}")

print("# --- digests ---")
show("sha256('abc')", hashlib.sha256(b"abc").hexdigest())
show("sha256('')", hashlib.sha256(b"").hexdigest())
show("sha3_256('abc')", hashlib.sha3_256(b"abc").hexdigest())
show("sha3_512('abc')", hashlib.sha3_512(b"abc").hexdigest())
show("shake128('abc',32)", hashlib.shake_128(b"abc").hexdigest(32))
show("shake256('abc',64)", hashlib.shake_256(b"abc").hexdigest(64))
show("shake256('',32)", hashlib.shake_256(b"").hexdigest(32))

print("# --- HKDF-SHA256 (RFC 5869 test case 1) ---")
ikm = bytes.fromhex("0b" * 22)
salt = bytes.fromhex("000102030405060708090a0b0c")
info = bytes.fromhex("f0f1f2f3f4f5f6f7f8f9")
show("rfc5869_tc1_okm", hkdf_sha256(ikm, salt, info, 42).hex())
show(
    "tunnel_request_key(ss=32*0x42, id='hs-1')",
    hkdf_sha256(b"\x42" * 32, b"keymux/tunnel/v1", b"request|hs-1", 32).hex(),
)
show(
    "tunnel_fragment_key(ss=32*0x42, tag='alpha')",
    hkdf_sha256(b"\x42" * 32, b"keymux/tunnel/v1", b"fragments|alpha", 32).hex(),
)

print("# --- Ed25519 (RFC 8032 section 7.1, TEST 1) ---")
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey
sk = bytes.fromhex("9d61b19deffd5a60ba844af492ec2cc44449c5697b326919703bac031cae7f60")
key = Ed25519PrivateKey.from_private_bytes(sk)
from cryptography.hazmat.primitives import serialization
pub = key.public_key().public_bytes(
    serialization.Encoding.Raw, serialization.PublicFormat.Raw)
show("ed25519_test1_pub", pub.hex())
show("ed25519_test1_sig(empty msg)", key.sign(b"").hex())

print("# --- ML-KEM-768 ---")
from cryptography.hazmat.primitives.asymmetric import mlkem
seed = bytes(range(64))
priv = mlkem.MLKEM768PrivateKey.from_seed_bytes(seed)
ek = priv.public_key().public_bytes_raw()
show("mlkem768_seed", seed.hex())
show("mlkem768_ek_len", len(ek))
show("mlkem768_ek_sha256", hashlib.sha256(ek).hexdigest())
show("mlkem768_ek_head", ek[:16].hex())
show("mlkem768_ek_tail", ek[-16:].hex())
ss, ct = priv.public_key().encapsulate()
show("mlkem768_oracle_ct_len", len(ct))
show("mlkem768_oracle_ct_hex", ct.hex())
show("mlkem768_oracle_ss_hex", ss.hex())
assert priv.decapsulate(ct) == ss

print("# --- chi-square p-values ---")
from scipy.stats import chi2
show("chi2_sf(2.0, df=3)", repr(chi2.sf(2.0, 3)))
show("chi2_sf(8.5, df=3)", repr(chi2.sf(8.5, 3)))
show("chi2_sf(15.0, df=9)", repr(chi2.sf(15.0, 9)))
show("chi2_sf(1.2, df=1)", repr(chi2.sf(1.2, 1)))
