// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0
//
// ML-KEM-768 implementation.  Arithmetic is plain 32-bit modular reduction
// (speed is not a concern at protocol scale); NTT twiddles are derived at
// startup from zeta = 17.  Validated against an independent implementation
// through the known-answer vectors in the test suite.

#include "keymux/mlkem.hpp"

#include <array>

#include "keymux/cryptobox.hpp"

namespace keymux::kem {

namespace {

constexpr int kN = 256;
constexpr int kQ = 3329;
constexpr int kK = 3;
constexpr int kEta1 = 2;
constexpr int kEta2 = 2;
constexpr int kDu = 10;
constexpr int kDv = 4;
constexpr size_t kPoly12 = 384;                        // 256 * 12 / 8
constexpr size_t kPkeSecretLen = kK * kPoly12;         // 1152
constexpr int kInv128 = 3303;                          // 128^-1 mod q

using Poly = std::array<int16_t, kN>;
using PolyVec = std::array<Poly, kK>;

int16_t mod_q(int32_t x) {
  x %= kQ;
  if (x < 0) x += kQ;
  return static_cast<int16_t>(x);
}

int16_t mul_q(int32_t a, int32_t b) { return static_cast<int16_t>((a * b) % kQ); }

int bitrev7(int i) {
  int r = 0;
  for (int b = 0; b < 7; ++b) r = (r << 1) | ((i >> b) & 1);
  return r;
}

// zetas[i] = 17^bitrev7(i) mod q; gammas[i] = 17^(2*bitrev7(i)+1) mod q.
struct Twiddles {
  std::array<int16_t, 128> zetas{};
  std::array<int16_t, 128> gammas{};
  Twiddles() {
    std::array<int16_t, 256> pow17{};
    pow17[0] = 1;
    for (int i = 1; i < 256; ++i) pow17[i] = mul_q(pow17[i - 1], 17);
    for (int i = 0; i < 128; ++i) {
      zetas[i] = pow17[bitrev7(i)];
      gammas[i] = pow17[2 * bitrev7(i) + 1];
    }
  }
};

const Twiddles& tw() {
  static const Twiddles t;
  return t;
}

void ntt(Poly& f) {
  int i = 1;
  for (int len = 128; len >= 2; len >>= 1) {
    for (int start = 0; start < kN; start += 2 * len) {
      int16_t zeta = tw().zetas[i++];
      for (int j = start; j < start + len; ++j) {
        int16_t t = mul_q(zeta, f[j + len]);
        f[j + len] = mod_q(f[j] - t);
        f[j] = mod_q(f[j] + t);
      }
    }
  }
}

void inverse_ntt(Poly& f) {
  int i = 127;
  for (int len = 2; len <= 128; len <<= 1) {
    for (int start = 0; start < kN; start += 2 * len) {
      int16_t zeta = tw().zetas[i--];
      for (int j = start; j < start + len; ++j) {
        int16_t t = f[j];
        f[j] = mod_q(t + f[j + len]);
        f[j + len] = mul_q(zeta, mod_q(f[j + len] - t));
      }
    }
  }
  for (auto& c : f) c = mul_q(c, kInv128);
}

// (a0 + a1 X)(b0 + b1 X) mod (X^2 - gamma)
Poly multiply_ntts(const Poly& a, const Poly& b) {
  Poly c{};
  for (int i = 0; i < 128; ++i) {
    int32_t a0 = a[2 * i], a1 = a[2 * i + 1], b0 = b[2 * i], b1 = b[2 * i + 1];
    int32_t t = (a1 * b1) % kQ;
    c[2 * i] = mod_q(a0 * b0 + t * tw().gammas[i]);
    c[2 * i + 1] = mod_q(a0 * b1 + a1 * b0);
  }
  return c;
}

Poly add(const Poly& a, const Poly& b) {
  Poly c;
  for (int i = 0; i < kN; ++i) c[i] = mod_q(a[i] + b[i]);
  return c;
}

Poly sub(const Poly& a, const Poly& b) {
  Poly c;
  for (int i = 0; i < kN; ++i) c[i] = mod_q(a[i] - b[i]);
  return c;
}

// Uniform rejection sampling from SHAKE128(rho || x || y).  The XOF here is
// one-shot, so on the rare draw that exhausts the prefix we re-squeeze a
// longer one; SHAKE outputs are prefix-consistent.
Poly sample_ntt(BytesView rho, uint8_t x, uint8_t y) {
  Bytes seed(rho.begin(), rho.end());
  seed.push_back(x);
  seed.push_back(y);
  size_t len = 3 * 168;  // three SHAKE128 blocks cover the expected demand
  Bytes stream = cryptobox::shake128(seed, len);
  Poly a{};
  size_t produced = 0, pos = 0;
  while (produced < kN) {
    if (pos + 3 > stream.size()) {
      len *= 2;
      stream = cryptobox::shake128(seed, len);
    }
    uint32_t b0 = stream[pos], b1 = stream[pos + 1], b2 = stream[pos + 2];
    pos += 3;
    uint32_t d1 = b0 | ((b1 & 0x0F) << 8);
    uint32_t d2 = (b1 >> 4) | (b2 << 4);
    if (d1 < kQ) a[produced++] = static_cast<int16_t>(d1);
    if (d2 < kQ && produced < kN) a[produced++] = static_cast<int16_t>(d2);
  }
  return a;
}

// Centered binomial, eta = 2: 4 bits per coefficient from a 128-byte PRF.
Poly sample_cbd2(BytesView b) {
  Poly f{};
  for (int i = 0; i < kN; ++i) {
    int nibble = (i & 1) ? (b[i >> 1] >> 4) : (b[i >> 1] & 0x0F);
    int x = (nibble & 1) + ((nibble >> 1) & 1);
    int y = ((nibble >> 2) & 1) + ((nibble >> 3) & 1);
    f[i] = mod_q(x - y);
  }
  return f;
}

Bytes prf(BytesView s, uint8_t n, int eta) {
  Bytes input(s.begin(), s.end());
  input.push_back(n);
  return cryptobox::shake256(input, 64 * static_cast<size_t>(eta));
}

int16_t compress(int16_t x, int d) {
  uint32_t v = ((static_cast<uint32_t>(x) << d) + (kQ >> 1)) / kQ;
  return static_cast<int16_t>(v & ((1u << d) - 1));
}

int16_t decompress(int16_t y, int d) {
  return static_cast<int16_t>((static_cast<uint32_t>(y) * kQ + (1u << (d - 1))) >> d);
}

void encode_bits(Bytes& out, const Poly& f, int d) {
  uint32_t acc = 0;
  int nbits = 0;
  for (int i = 0; i < kN; ++i) {
    acc |= static_cast<uint32_t>(f[i] & ((1 << d) - 1)) << nbits;
    nbits += d;
    while (nbits >= 8) {
      out.push_back(static_cast<uint8_t>(acc & 0xFF));
      acc >>= 8;
      nbits -= 8;
    }
  }
}

Poly decode_bits(BytesView in, size_t& pos, int d) {
  Poly f{};
  uint32_t acc = 0;
  int nbits = 0;
  for (int i = 0; i < kN; ++i) {
    while (nbits < d) {
      acc |= static_cast<uint32_t>(in[pos++]) << nbits;
      nbits += 8;
    }
    int16_t v = static_cast<int16_t>(acc & ((1u << d) - 1));
    f[i] = (d == 12) ? static_cast<int16_t>(v % kQ) : v;
    acc >>= d;
    nbits -= d;
  }
  return f;
}

// Row i of A (or A^T) times v_hat, with A[i][j] <- SampleNTT(rho || j || i);
// rows are sampled on the fly so the matrix is never materialized.
Poly matvec_row(BytesView rho, bool transposed, int i, const PolyVec& v_hat) {
  Poly acc{};
  for (int j = 0; j < kK; ++j) {
    Poly a = transposed ? sample_ntt(rho, static_cast<uint8_t>(i), static_cast<uint8_t>(j))
                        : sample_ntt(rho, static_cast<uint8_t>(j), static_cast<uint8_t>(i));
    acc = add(acc, multiply_ntts(a, v_hat[j]));
  }
  return acc;
}

struct PkeKeyPair {
  Bytes ek;  // encode12(t_hat) || rho
  Bytes dk;  // encode12(s_hat)
};

PkeKeyPair pke_keygen(BytesView d) {
  Bytes input(d.begin(), d.end());
  input.push_back(static_cast<uint8_t>(kK));  // domain separation per parameter set
  Bytes g = cryptobox::sha3_512(input);
  BytesView rho(g.data(), 32), sigma(g.data() + 32, 32);

  uint8_t n = 0;
  PolyVec s_hat, e_hat;
  for (int i = 0; i < kK; ++i) {
    s_hat[i] = sample_cbd2(prf(sigma, n++, kEta1));
    ntt(s_hat[i]);
  }
  for (int i = 0; i < kK; ++i) {
    e_hat[i] = sample_cbd2(prf(sigma, n++, kEta1));
    ntt(e_hat[i]);
  }

  PkeKeyPair kp;
  for (int i = 0; i < kK; ++i) {
    Poly t_hat = add(matvec_row(rho, false, i, s_hat), e_hat[i]);
    encode_bits(kp.ek, t_hat, 12);
  }
  kp.ek.insert(kp.ek.end(), rho.begin(), rho.end());
  for (int i = 0; i < kK; ++i) encode_bits(kp.dk, s_hat[i], 12);
  return kp;
}

Bytes pke_encrypt(BytesView ek, BytesView m, BytesView r) {
  size_t pos = 0;
  PolyVec t_hat;
  for (int i = 0; i < kK; ++i) t_hat[i] = decode_bits(ek, pos, 12);
  BytesView rho = ek.subspan(kPkeSecretLen, 32);

  uint8_t n = 0;
  PolyVec y_hat;
  for (int i = 0; i < kK; ++i) {
    y_hat[i] = sample_cbd2(prf(r, n++, kEta1));
    ntt(y_hat[i]);
  }
  PolyVec e1;
  for (int i = 0; i < kK; ++i) e1[i] = sample_cbd2(prf(r, n++, kEta2));
  Poly e2 = sample_cbd2(prf(r, n, kEta2));

  Bytes ct;
  ct.reserve(MlKem768::kCiphertextLen);
  for (int i = 0; i < kK; ++i) {
    Poly u = matvec_row(rho, true, i, y_hat);
    inverse_ntt(u);
    u = add(u, e1[i]);
    for (auto& c : u) c = compress(c, kDu);
    encode_bits(ct, u, kDu);
  }

  Poly v{};
  for (int j = 0; j < kK; ++j) v = add(v, multiply_ntts(t_hat[j], y_hat[j]));
  inverse_ntt(v);
  v = add(v, e2);
  size_t mpos = 0;
  Poly mu = decode_bits(m, mpos, 1);
  for (auto& c : mu) c = decompress(c, 1);
  v = add(v, mu);
  for (auto& c : v) c = compress(c, kDv);
  encode_bits(ct, v, kDv);
  return ct;
}

Bytes pke_decrypt(BytesView dk, BytesView ct) {
  size_t pos = 0;
  PolyVec u;
  for (int i = 0; i < kK; ++i) {
    u[i] = decode_bits(ct, pos, kDu);
    for (auto& c : u[i]) c = decompress(c, kDu);
  }
  Poly v = decode_bits(ct, pos, kDv);
  for (auto& c : v) c = decompress(c, kDv);

  size_t spos = 0;
  PolyVec s_hat;
  for (int i = 0; i < kK; ++i) s_hat[i] = decode_bits(dk, spos, 12);

  Poly w{};
  for (int j = 0; j < kK; ++j) {
    Poly uj = u[j];
    ntt(uj);
    w = add(w, multiply_ntts(s_hat[j], uj));
  }
  inverse_ntt(w);
  w = sub(v, w);
  for (auto& c : w) c = compress(c, 1);
  Bytes m;
  encode_bits(m, w, 1);
  return m;
}

void check_encap_key(BytesView ek) {
  if (ek.size() != MlKem768::kEncapKeyLen) {
    throw Error(ErrorKind::Parameter, "ML-KEM encapsulation key has wrong length");
  }
  // Modulus check: the 12-bit encoding must round-trip.
  size_t pos = 0;
  Bytes reencoded;
  reencoded.reserve(kPkeSecretLen);
  for (int i = 0; i < kK; ++i) {
    Poly t = decode_bits(ek, pos, 12);
    encode_bits(reencoded, t, 12);
  }
  if (!cryptobox::ct_equal(BytesView(reencoded), ek.subspan(0, kPkeSecretLen))) {
    throw Error(ErrorKind::Parameter, "ML-KEM encapsulation key fails the modulus check");
  }
}

}  // namespace

KemKeyPair MlKem768::keygen_internal(BytesView d, BytesView z) {
  if (d.size() != kSeedLen || z.size() != kSeedLen) {
    throw Error(ErrorKind::Parameter, "ML-KEM seeds must be 32 bytes");
  }
  PkeKeyPair pke = pke_keygen(d);
  KemKeyPair kp;
  kp.encap_key = pke.ek;
  Bytes dk = std::move(pke.dk);
  dk.insert(dk.end(), pke.ek.begin(), pke.ek.end());
  Bytes h = cryptobox::sha3_256(pke.ek);
  dk.insert(dk.end(), h.begin(), h.end());
  dk.insert(dk.end(), z.begin(), z.end());
  kp.decap_key = SecureBytes(std::move(dk));
  return kp;
}

Encapsulation MlKem768::encaps_internal(BytesView ek, BytesView m) {
  check_encap_key(ek);
  if (m.size() != kSeedLen) {
    throw Error(ErrorKind::Parameter, "ML-KEM encapsulation randomness must be 32 bytes");
  }
  Bytes input(m.begin(), m.end());
  Bytes h = cryptobox::sha3_256(ek);
  input.insert(input.end(), h.begin(), h.end());
  Bytes g = cryptobox::sha3_512(input);  // (K, r)
  Encapsulation out;
  out.ciphertext = pke_encrypt(ek, m, BytesView(g.data() + 32, 32));
  out.shared_secret = SecureBytes(Bytes(g.begin(), g.begin() + 32));
  return out;
}

KemKeyPair MlKem768::generate_keypair(Rng& rng) {
  Bytes d(kSeedLen), z(kSeedLen);
  rng.fill(d);
  rng.fill(z);
  return keygen_internal(d, z);
}

Encapsulation MlKem768::encapsulate(BytesView encap_key, Rng& rng) {
  Bytes m(kSeedLen);
  rng.fill(m);
  return encaps_internal(encap_key, m);
}

SecureBytes MlKem768::decapsulate(BytesView decap_key, BytesView ciphertext) {
  if (decap_key.size() != kDecapKeyLen) {
    throw Error(ErrorKind::Parameter, "ML-KEM decapsulation key has wrong length");
  }
  if (ciphertext.size() != kCiphertextLen) {
    throw Error(ErrorKind::Parameter, "ML-KEM ciphertext has wrong length");
  }
  BytesView dk_pke = decap_key.subspan(0, kPkeSecretLen);
  BytesView ek_pke = decap_key.subspan(kPkeSecretLen, kEncapKeyLen);
  BytesView h = decap_key.subspan(kPkeSecretLen + kEncapKeyLen, 32);
  BytesView z = decap_key.subspan(kPkeSecretLen + kEncapKeyLen + 32, 32);
  Bytes ek_hash = cryptobox::sha3_256(ek_pke);
  if (!cryptobox::ct_equal(ek_hash, h)) {
    throw Error(ErrorKind::Parameter, "ML-KEM decapsulation key hash check failed");
  }

  Bytes m_prime = pke_decrypt(dk_pke, ciphertext);
  Bytes input = m_prime;
  input.insert(input.end(), h.begin(), h.end());
  Bytes g = cryptobox::sha3_512(input);  // (K', r')

  Bytes reject_input(z.begin(), z.end());
  reject_input.insert(reject_input.end(), ciphertext.begin(), ciphertext.end());
  Bytes k_reject = cryptobox::shake256(reject_input, 32);

  Bytes ct_prime = pke_encrypt(ek_pke, m_prime, BytesView(g.data() + 32, 32));

  // Implicit rejection: constant-time select between K' and J(z || ct).
  uint8_t ok = cryptobox::ct_equal(ct_prime, ciphertext) ? 0xFF : 0x00;
  Bytes ss(32);
  for (int i = 0; i < 32; ++i) {
    ss[i] = static_cast<uint8_t>((g[i] & ok) | (k_reject[i] & ~ok));
  }
  return SecureBytes(std::move(ss));
}

}  // namespace keymux::kem
