// Copyright 2026 The Promptsmith Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Adapter for real models hosted by a model server (e.g. a CLIP + BLIP +
// LPIPS process on an accelerator) speaking a small JSON-over-HTTP protocol:
//
//   GET  /info                      {dim, vocab_id, vocab_size, caption_vocab_id,
//                                    supports_embedding_input}
//   POST /tokenize                  {text}                -> {tokens}
//   POST /decode                    {tokens}              -> {text}
//   POST /encode_text               {tokens}              -> {embedding}
//   POST /encode_image              {image_png_base64}    -> {embedding}
//   GET  /token_embeddings                                -> {embeddings: [[...]]}
//   POST /encode_embeddings         {embeddings}          -> {embedding}
//   POST /encode_embeddings_vjp     {embeddings, grad}    -> {grad: [[...]]}
//   POST /caption/tokenize          {text}                -> {tokens}
//   POST /caption/decode            {tokens}              -> {text}
//   POST /caption/generate          {image_png_base64}    -> {tokens}
//   POST /caption/continue          {image_png_base64, prefix_tokens,
//                                    max_new_tokens}      -> {tokens}
//   POST /perceptual                {a_png_base64, b_png_base64} -> {distance}
//
// Errors are reported as non-2xx responses with {"error": message}.
//
// One HTTP connection is shared and calls are serialized behind a mutex, so
// a multi-threaded caller gets at most one in-flight model call per gateway.

#include <memory>
#include <string>

#include "promptsmith/gateway.hpp"

namespace httplib {
class Server;
}

namespace promptsmith::remote {

Gateway remote_gateway(const std::string& base_url, int timeout_s = 300);

// Serves the protocol above on top of an existing gateway. Used as the
// reference implementation for model-server authors and by the tests.
void install_gateway_routes(httplib::Server& server, Gateway gateway);

}  // namespace promptsmith::remote
