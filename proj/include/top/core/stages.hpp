#pragma once

// Built-in stage sets: chat-endpoint stages for text, style transfer for images.

#include <memory>
#include <vector>

#include "top/core/pipeline.hpp"
#include "top/io/png.hpp"
#include "top/style/transfer.hpp"
#include "top/text/chat_client.hpp"
#include "top/text/prompt.hpp"

namespace top {

/// Extractor: H' = I^p + H sent to the endpoint. Generator: x' = I^c + P + x.
inline void register_text_stages(StageRegistry& r, std::shared_ptr<text::ChatClient> client,
                                 text::PromptTemplates templates) {
    templates.validate();
    r.set_extractor(Modality::text, {"chat-preference", [client, templates](const UserHistory& h) {
                                         return text::extract_preference(
                                             *client, text::assemble_preference_prompt(templates, h));
                                     }});
    r.set_preference_encoder(Modality::text, {"identity", [](const Preference& p) { return p; }});
    r.set_content_encoder(Modality::text, {"identity", [](const ContentInput& c) { return c; }});
    r.set_generator(Modality::text, {"chat-paraphrase", [client, templates](const ContentInput& c, const Preference& p) {
                                         return ParaphraseOutput(text::paraphrase_text(
                                             *client, text::assemble_paraphrase_prompt(templates, p, c.text())));
                                     }});
}

/// Decoded pixels of every history image, reading files for references without pixels.
inline std::vector<ImageTensor> load_history_images(const UserHistory& h) {
    if (h.modality() != Modality::image) throw ModalityError("expected an image history");
    std::vector<ImageTensor> out;
    for (const auto& item : h.items) {
        const auto& ref = std::get<ImageRef>(item);
        out.push_back(ref.pixels ? *ref.pixels : io::read_png(ref.path));
    }
    return out;
}

/// Extractor: mean gram/histogram target of the history. Generator: transfer().
inline void register_style_stages(StageRegistry& r, std::shared_ptr<const style::ConvBank> bank,
                                  style::LossConfig cfg) {
    cfg.validate(bank->layer_count());
    r.set_extractor(Modality::image, {"style-target", [bank, cfg](const UserHistory& h) {
                                          return Preference::style_target(
                                              style::aggregate_style_target(load_history_images(h), *bank, cfg.bins));
                                      }});
    r.set_preference_encoder(Modality::image, {"identity", [](const Preference& p) { return p; }});
    r.set_content_encoder(Modality::image, {"identity", [](const ContentInput& c) { return c; }});
    r.set_generator(Modality::image, {"style-transfer", [bank, cfg](const ContentInput& c, const Preference& p) {
                                          return ParaphraseOutput(
                                              style::transfer(c.image(), p.as_style_target(), *bank, cfg).image);
                                      }});
}

} // namespace top
