// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "keymux/keycore.hpp"
#include "keymux/tunnel.hpp"

using namespace keymux;
using namespace keymux::tunnel;

TEST_CASE("tunnel keys match the frozen kdf transcript") {
  // Derivations frozen from an independent HKDF implementation so the key
  // schedule stays wire-stable across refactors.
  Bytes ss(32, 0x42);
  SecureBytes req_key = derive_request_key(ss, "hs-1");
  CHECK(to_hex(req_key.view()) ==
        "5e53d311a6fe26ba702f11e9ade05bb3e5e3ae73ff62ea85d0f1d532cd7ae5ca");
  SecureBytes frag_key = derive_fragment_key(ss, "alpha");
  CHECK(to_hex(frag_key.view()) ==
        "042366ff0555e0a80f03afddc17b6b71ace8e2afb38d7c23ee8775f9d9f8d830");

  // Different handshakes and tags yield unrelated keys.
  CHECK_FALSE(derive_request_key(ss, "hs-2") == req_key);
  CHECK_FALSE(derive_fragment_key(ss, "beta") == frag_key);
  CHECK_FALSE(req_key == frag_key);
}

TEST_CASE("seal and open round trip, bound to context") {
  Bytes ss(32, 0x11);
  SecureBytes key = derive_request_key(ss, "h");
  Bytes msg = to_bytes("{\"tagname\":\"t\"}");

  Bytes sealed = seal(key.view(), msg, "get-key-parameters");
  CHECK(open(key.view(), sealed, "get-key-parameters") == msg);

  // The context string is authenticated: an ack key cannot open a request.
  CHECK_THROWS_AS(open(key.view(), sealed, "ack"), Error);

  Bytes damaged = sealed;
  damaged.back() ^= 1;
  CHECK_THROWS_AS(open(key.view(), damaged, "get-key-parameters"), Error);

  SecureBytes other = derive_request_key(Bytes(32, 0x12), "h");
  CHECK_THROWS_AS(open(other.view(), sealed, "get-key-parameters"), Error);

  // Fresh nonces: sealing twice never repeats.
  CHECK(seal(key.view(), msg, "get-key-parameters") != sealed);
}

TEST_CASE("fragment wrapping adds a distinguishable outer layer") {
  Bytes ss(32, 0x77);
  SecureBytes fk = derive_fragment_key(ss, "tag-9");

  Bytes inner{0x01};  // direct-mode inner ciphertext stand-in
  inner.resize(64, 0xee);

  Bytes wire = wrap_fragment(fk.view(), inner, "tag-9");
  CHECK(wire[0] == kTunnelLayerByte);
  CHECK(is_tunneled(wire));
  CHECK_FALSE(is_tunneled(inner));
  CHECK_FALSE(is_tunneled(Bytes{}));

  CHECK(unwrap_fragment(fk.view(), wire, "tag-9") == inner);
}

TEST_CASE("unwrap refuses the wrong tag, key, or framing") {
  Bytes ss(32, 0x31);
  SecureBytes fk = derive_fragment_key(ss, "t1");
  Bytes inner(40, 0xab);
  Bytes wire = wrap_fragment(fk.view(), inner, "t1");

  // Tag is authenticated (aad) and also feeds the key derivation.
  CHECK_THROWS_AS(unwrap_fragment(fk.view(), wire, "t2"), Error);
  SecureBytes other = derive_fragment_key(ss, "t2");
  CHECK_THROWS_AS(unwrap_fragment(other.view(), wire, "t1"), Error);

  Bytes tampered = wire;
  tampered[wire.size() / 2] ^= 1;
  CHECK_THROWS_AS(unwrap_fragment(fk.view(), tampered, "t1"), Error);

  // A non-tunneled ciphertext cannot be unwrapped.
  CHECK_THROWS_AS(unwrap_fragment(fk.view(), inner, "t1"), Error);
  CHECK_THROWS_AS(unwrap_fragment(fk.view(), Bytes{kTunnelLayerByte}, "t1"), Error);
}

TEST_CASE("tunnel layer composes with fragment encryption") {
  // Full stack: fragment -> asymmetric seal -> tunnel wrap -> unwrap ->
  // open.  Stripping only the tunnel layer leaves ciphertext, not
  // plaintext.
  auto pair = keycore::AsymmetricKeyPair::generate();
  auto pub = cryptobox::RsaPublicKey::from_der(pair.public_der);
  auto priv = cryptobox::RsaPrivateKey::from_der(pair.private_der);

  keycore::PlainFragment f{1, 2, Bytes{0xde, 0xad, 0xbe, 0xef}};
  keycore::EncryptedFragment ef =
      keycore::encrypt_fragment(f, pub, "session-x", keycore::EncryptMode::DirectAsymmetric);

  Bytes ss(32, 0x99);
  SecureBytes fk = derive_fragment_key(ss, "session-x");
  Bytes wire = wrap_fragment(fk.view(), ef.ciphertext, "session-x");

  Bytes stripped = unwrap_fragment(fk.view(), wire, "session-x");
  CHECK(stripped == ef.ciphertext);
  CHECK(stripped[0] == 0x01);  // still the asymmetric layer
  CHECK_FALSE(contains_bytes(stripped, f.payload));

  keycore::EncryptedFragment inner_ef{"session-x", stripped, ""};
  keycore::FragmentDecryptor dec(priv);
  CHECK(dec.decrypt(inner_ef) == f);
}
