#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dtlog/compiler.hpp"
#include "dtlog/kb.hpp"
#include "dtlog/runtime.hpp"

namespace dtlog {

struct Example {
  Query query;
  std::vector<std::string> positives;

  bool operator==(const Example&) const = default;
};

// `pred TAB mode TAB input TAB pos1[,pos2,...]` per line; '#' comments.
std::vector<Example> load_examples(std::string_view text);
std::string serialize_examples(std::span<const Example> examples);

// Loss charged to an example none of whose positives has any proof mass.
inline constexpr double kNoSupportLoss = 1e3;

struct LossGrad {
  double loss = 0.0;
  // dLoss/dg, dense over constants; zero off the support of g.
  std::vector<double> grad;
  // False when no positive is in the support of g.
  bool supported = false;
};

// Softmax cross-entropy with the softmax restricted to the support of g and a
// uniform target over the supported positives.
LossGrad loss_and_grad(const SparseVector& g, std::span<const ConstantId> positives);

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 30;
  // Predicates whose facts are trained; tagged rule weights always are.
  std::vector<std::string> trainable;
  bool train_all = false;
};

struct EpochLog {
  int epoch = 0;
  // Mean loss and training accuracy of the parameters the epoch started with.
  double loss = 0.0;
  double accuracy = 0.0;
};

struct TrainResult {
  KnowledgeBase kb;
  std::vector<EpochLog> log;
};

std::vector<char> trainable_mask(const KnowledgeBase& kb, const TrainConfig& config);

// Full-batch gradient descent on the mean loss, examples in dataset order,
// weights clamped at zero after every step.
TrainResult train(const FunctionRegistry& registry, const KnowledgeBase& kb,
                  std::span<const Example> dataset, const TrainConfig& config,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

// Index of the largest entry (ties to the lowest id), or -1 when g is empty.
ConstantId argmax(const SparseVector& g);

double evaluate_accuracy(const FunctionRegistry& registry, const KnowledgeBase& kb,
                         std::span<const Example> dataset);

}  // namespace dtlog
