#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gusnet/chat_client.hpp"
#include "gusnet/corpus_forge.hpp"
#include "gusnet/labels.hpp"

namespace gusnet {

struct OfflineBackendOptions {
  // When > 0, roughly one in `misalign_every` first-attempt annotation replies
  // drops its last tag, which exercises the corrective re-prompt loop.
  int misalign_every = 0;
};

// Deterministic stand-in for the chat model. Generation prompts get a
// templated sentence about the target group found in the prompt; annotation
// prompts get lexicon-based tags for the agent's entity class. Replies depend
// only on the request body.
std::shared_ptr<ChatTransport> make_offline_backend(const ArgumentGrid& grid,
                                                    OfflineBackendOptions options = {});

std::string offline_generate(const std::string& prompt, const ArgumentGrid& grid);
std::vector<Tag> offline_annotate(const std::vector<std::string>& words, EntityClass entity,
                                  const ArgumentGrid& grid);

}  // namespace gusnet
