// Text pipeline against the offline echo endpoint, then a small style transfer
// on synthetic images, each scored with the default metric registry.

#include <cmath>
#include <iostream>
#include <memory>

#include "top/core/pipeline.hpp"
#include "top/core/stages.hpp"

int main() {
    using namespace top;

    // Text: history -> preference -> paraphrase, all through mock://echo.
    text::ChatEndpointConfig endpoint;
    endpoint.base_url = "mock://echo";
    auto client = std::make_shared<text::ChatClient>(endpoint);

    StageRegistry stages;
    register_text_stages(stages, client, text::PromptTemplates{});

    UserHistory history;
    history.items = {std::string("Loved the brushwork, the colours felt warm."),
                     std::string("Prefers short, vivid descriptions.")};
    const ContentInput content("A landscape painted in oil, showing a river at dusk.");

    const auto run = run_pipeline(history, content, stages);
    std::cout << "preference: " << run.preference.as_text() << '\n';
    std::cout << "output:     " << run.output.text() << '\n';
    const metrics::MetricRegistry rouge = {{"rouge_l_f", metrics::MetricIndex::cpi}};
    std::cout << "report:     " << evaluate(run.output, content, run.preference, rouge).to_json().dump() << "\n\n";

    // Image: a striped style image restyles a smooth gradient.
    ImageTensor base(32, 32), stripes(32, 32);
    for (std::size_t y = 0; y < 32; ++y)
        for (std::size_t x = 0; x < 32; ++x) {
            base.at(y, x, 0) = x / 31.0;
            base.at(y, x, 1) = y / 31.0;
            base.at(y, x, 2) = 0.5;
            const double s = 0.5 + 0.5 * std::sin(static_cast<double>(x + y));
            for (std::size_t c = 0; c < 3; ++c) stripes.at(y, x, c) = c == 2 ? s : 1.0 - s;
        }

    auto bank = std::make_shared<const style::ConvBank>(style::ConvBankSpec::standard(7));
    style::LossConfig loss;
    loss.beta = 1e5;
    loss.gamma = 1.0;
    loss.max_iterations = 30;
    register_style_stages(stages, bank, loss);

    UserHistory images;
    images.items = {ImageRef{"stripes.png", stripes}};
    const ContentInput picture(base);
    const auto styled = run_pipeline(images, picture, stages);

    metrics::EvalContext ctx;
    ctx.bank = bank;
    ctx.loss = loss;
    const auto report = evaluate(styled.output, picture, styled.preference, metrics::default_image_registry(), {}, ctx);
    std::cout << "image report: " << report.to_json().dump() << '\n';
}
