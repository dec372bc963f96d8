// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "keymux/keycore.hpp"

using namespace keymux;
using namespace keymux::keycore;

namespace {

SessionKey make_key(Bytes material) {
  SessionKey k;
  k.bits = static_cast<uint32_t>(material.size() * 8);
  k.material = SecureBytes(std::move(material));
  return k;
}

}  // namespace

TEST_CASE("generate_key produces the requested amount of material") {
  SeededRng rng(1);
  SessionKey k = generate_key(256, rng);
  CHECK(k.bits == 256);
  CHECK(k.material.size() == 32);
  SessionKey k2 = generate_key(256, rng);
  CHECK_FALSE(k == k2);

  SeededRng rng2(1);
  SessionKey k3 = generate_key(256, rng2);
  CHECK(k == k3);  // same seed, same key

  CHECK(generate_key(128, rng).material.size() == 16);
  CHECK_THROWS_AS(generate_key(512, rng), Error);          // not in default set
  CHECK_THROWS_AS(generate_key(0, rng), Error);
  CHECK(generate_key(512, rng, {512}).material.size() == 64);  // custom set
}

TEST_CASE("fragment sizes differ by at most one byte, longer chunks first") {
  // 10 bytes into 3 fragments: 10 = 3*3 + 1, so sizes are 4,3,3.
  SessionKey k = make_key(Bytes{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  auto frags = fragment_key(k, 3);
  REQUIRE(frags.size() == 3);
  CHECK(frags[0].payload == Bytes{0, 1, 2, 3});
  CHECK(frags[1].payload == Bytes{4, 5, 6});
  CHECK(frags[2].payload == Bytes{7, 8, 9});
  for (uint16_t i = 0; i < 3; ++i) {
    CHECK(frags[i].index == i);
    CHECK(frags[i].total == 3);
  }
}

TEST_CASE("fragmentation covers degenerate counts") {
  SessionKey k = make_key(Bytes(32, 0xaa));
  CHECK(fragment_key(k, 1).size() == 1);
  CHECK(fragment_key(k, 1)[0].payload.size() == 32);
  auto all = fragment_key(k, 32);  // one byte each
  CHECK(all.size() == 32);
  for (const auto& f : all) CHECK(f.payload.size() == 1);

  CHECK_THROWS_AS(fragment_key(k, 0), Error);
  CHECK_THROWS_AS(fragment_key(k, 33), Error);  // would create empty fragments
}

TEST_CASE("reconstruction is order independent") {
  SeededRng rng(77);
  SessionKey k = generate_key(256, rng);
  auto frags = fragment_key(k, 7);
  std::reverse(frags.begin(), frags.end());
  CHECK(reconstruct_key(frags) == k);

  auto shuffled = shuffle_fragments(fragment_key(k, 7), rng);
  CHECK(reconstruct_key(shuffled) == k);
}

TEST_CASE("shuffle permutes but preserves contents") {
  SessionKey k = make_key(Bytes{10, 20, 30, 40, 50, 60, 70, 80});
  auto orig = fragment_key(k, 8);
  SeededRng rng(5);
  auto shuf = shuffle_fragments(orig, rng);
  REQUIRE(shuf.size() == orig.size());

  // Same multiset of fragments.
  std::map<uint16_t, Bytes> by_index;
  for (const auto& f : shuf) by_index[f.index] = f.payload;
  CHECK(by_index.size() == 8);
  for (const auto& f : orig) CHECK(by_index.at(f.index) == f.payload);

  // Seeded reproducibility.
  SeededRng rng2(5);
  auto shuf2 = shuffle_fragments(orig, rng2);
  for (size_t i = 0; i < shuf.size(); ++i) CHECK(shuf[i] == shuf2[i]);

  // Over many seeds the permutation varies.
  bool moved = false;
  for (uint64_t s = 0; s < 8 && !moved; ++s) {
    SeededRng r(s);
    auto sh = shuffle_fragments(orig, r);
    for (size_t i = 0; i < sh.size(); ++i) {
      if (sh[i].index != orig[i].index) moved = true;
    }
  }
  CHECK(moved);
}

TEST_CASE("reconstruction fails loudly on bad sets") {
  SessionKey k = make_key(Bytes{1, 2, 3, 4, 5, 6});
  auto frags = fragment_key(k, 3);

  SUBCASE("missing fragment") {
    frags.pop_back();
    CHECK_THROWS_AS(reconstruct_key(frags), Error);
  }
  SUBCASE("identical duplicate is tolerated") {
    frags.push_back(frags[0]);
    CHECK(reconstruct_key(frags) == k);
  }
  SUBCASE("conflicting duplicate") {
    PlainFragment forged = frags[0];
    forged.payload[0] ^= 0xff;
    frags.push_back(forged);
    CHECK_THROWS_AS(reconstruct_key(frags), Error);
  }
  SUBCASE("mixed totals") {
    frags[1].total = 4;
    CHECK_THROWS_AS(reconstruct_key(frags), Error);
  }
  SUBCASE("empty set") {
    CHECK_THROWS_AS(reconstruct_key({}), Error);
  }
}

TEST_CASE("fragment serialization layout is big-endian and exact") {
  PlainFragment f;
  f.index = 1;
  f.total = 3;
  f.payload = Bytes{0xaa, 0xbb};
  Bytes wire = serialize_fragment(f);
  CHECK(wire == Bytes{0x00, 0x01, 0x00, 0x03, 0x00, 0x00, 0x00, 0x02, 0xaa, 0xbb});
  CHECK(deserialize_fragment(wire) == f);

  CHECK_THROWS_AS(deserialize_fragment(Bytes{0, 1}), Error);  // truncated header
  Bytes short_payload = wire;
  short_payload.pop_back();
  CHECK_THROWS_AS(deserialize_fragment(short_payload), Error);
  Bytes trailing = wire;
  trailing.push_back(0);
  CHECK_THROWS_AS(deserialize_fragment(trailing), Error);  // trailing bytes
}

TEST_CASE("direct mode: one asymmetric op per fragment") {
  auto pair = AsymmetricKeyPair::generate();
  auto pub = cryptobox::RsaPublicKey::from_der(pair.public_der);
  auto priv = cryptobox::RsaPrivateKey::from_der(pair.private_der);

  SeededRng rng(9);
  SessionKey k = generate_key(256, rng);
  auto frags = fragment_key(k, 6);

  FragmentEncryptor enc(pub, "tag-direct", EncryptMode::DirectAsymmetric);
  FragmentDecryptor dec(priv);
  std::vector<PlainFragment> out;
  for (const auto& f : frags) {
    EncryptedFragment ef = enc.encrypt(f);
    CHECK(ef.session_tag == "tag-direct");
    CHECK(ef.ciphertext[0] == 0x01);  // mode byte
    CHECK(ef.ciphertext.size() == 1 + 256);
    out.push_back(dec.decrypt(ef));
  }
  CHECK(dec.asymmetric_ops() == 6);
  CHECK(reconstruct_key(out) == k);
}

TEST_CASE("envelope mode: one asymmetric op per dispatch") {
  auto pair = AsymmetricKeyPair::generate();
  auto pub = cryptobox::RsaPublicKey::from_der(pair.public_der);
  auto priv = cryptobox::RsaPrivateKey::from_der(pair.private_der);

  SeededRng rng(10);
  SessionKey k = generate_key(256, rng);
  auto frags = fragment_key(k, 8);

  FragmentEncryptor enc(pub, "tag-env", EncryptMode::Envelope);
  FragmentDecryptor dec(priv);
  std::vector<PlainFragment> out;
  for (const auto& f : frags) {
    EncryptedFragment ef = enc.encrypt(f);
    CHECK(ef.ciphertext[0] == 0x02);
    // layout: mode | u16 wrapped_len | wrapped | nonce|ct|tag
    CHECK(get_u16_be(ef.ciphertext, 1) == 256);
    out.push_back(dec.decrypt(ef));
  }
  CHECK(dec.asymmetric_ops() == 1);  // the whole dispatch shares one unwrap
  CHECK(reconstruct_key(out) == k);
}

TEST_CASE("decryptor rejects wrong key, wrong tag, and tampering") {
  auto pair = AsymmetricKeyPair::generate();
  auto pub = cryptobox::RsaPublicKey::from_der(pair.public_der);
  auto priv = cryptobox::RsaPrivateKey::from_der(pair.private_der);
  PlainFragment f{0, 1, Bytes{1, 2, 3, 4}};

  for (EncryptMode mode : {EncryptMode::DirectAsymmetric, EncryptMode::Envelope}) {
    CAPTURE(to_string(mode));
    EncryptedFragment ef = encrypt_fragment(f, pub, "tag", mode);

    // Round trip through the convenience forms.
    CHECK(decrypt_fragment(ef, priv) == f);

    FragmentDecryptor wrong(cryptobox::RsaPrivateKey::generate());
    CHECK_THROWS_AS(wrong.decrypt(ef), Error);

    // The session tag is authenticated into the ciphertext.
    EncryptedFragment retagged = ef;
    retagged.session_tag = "other";
    FragmentDecryptor dec1(priv);
    CHECK_THROWS_AS(dec1.decrypt(retagged), Error);

    EncryptedFragment damaged = ef;
    damaged.ciphertext.back() ^= 1;
    FragmentDecryptor dec2(priv);
    CHECK_THROWS_AS(dec2.decrypt(damaged), Error);
  }

  EncryptedFragment unknown_mode = encrypt_fragment(f, pub, "tag", EncryptMode::DirectAsymmetric);
  unknown_mode.ciphertext[0] = 0x7f;
  FragmentDecryptor dec(priv);
  CHECK_THROWS_AS(dec.decrypt(unknown_mode), Error);
  CHECK_THROWS_AS(dec.decrypt(EncryptedFragment{"t", {}, ""}), Error);
}

TEST_CASE("envelope ciphertexts stay fresh across fragments") {
  auto pair = AsymmetricKeyPair::generate();
  auto pub = cryptobox::RsaPublicKey::from_der(pair.public_der);
  FragmentEncryptor enc(pub, "t", EncryptMode::Envelope);
  PlainFragment f{0, 2, Bytes{9, 9}};
  // Same plaintext sealed twice never repeats on the wire (fresh nonce).
  CHECK(enc.encrypt(f).ciphertext != enc.encrypt(f).ciphertext);
}

TEST_CASE("encrypt mode string mapping") {
  CHECK(encrypt_mode_from_string("direct-asymmetric") == EncryptMode::DirectAsymmetric);
  CHECK(encrypt_mode_from_string("envelope") == EncryptMode::Envelope);
  CHECK(to_string(EncryptMode::Envelope) == "envelope");
  CHECK(to_string(EncryptMode::DirectAsymmetric) == "direct-asymmetric");
  CHECK_THROWS_AS(encrypt_mode_from_string("bogus"), Error);
}
