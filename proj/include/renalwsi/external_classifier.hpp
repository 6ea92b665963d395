#pragma once

#include <condition_variable>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "renalwsi/classifier.hpp"

namespace renal {

// Bridge to an external patch classifier speaking newline-delimited JSON over
// its standard streams:
//
//   -> {"type":"hello","patch_size":N,"classes":[...canonical names...]}
//   <- {"type":"ready"}
//   -> {"type":"classify","id":K,"png_b64":"..."}
//   <- {"type":"probs","id":K,"probs":[p0..p4]}
//
// Ids must round-trip unchanged; unknown message types, id mismatches and
// malformed lines raise protocol_error. A response that parses but violates
// the distribution contract raises classification_error naming the patch.

struct ExternalBackendOptions {
    std::string command;           // run through /bin/sh -c
    int patch_size = 224;
    double timeout_seconds = 30.0; // per patch round-trip
    int workers = 1;               // one child process per worker
};

class ExternalProcess; // owns one child and its pipes

class ExternalClassifier : public PatchClassifier {
public:
    explicit ExternalClassifier(ExternalBackendOptions options);
    ~ExternalClassifier() override;

    // Thread-safe: each call owns one worker process for the duration of a
    // single request/response round-trip.
    ClassDistribution classify(const Patch& patch) override;
    std::string name() const override { return "external"; }

private:
    ExternalBackendOptions options_;
    std::mutex mutex_;
    std::condition_variable idle_cv_;
    std::vector<std::unique_ptr<ExternalProcess>> idle_;
    int next_id_ = 0;
};

} // namespace renal
