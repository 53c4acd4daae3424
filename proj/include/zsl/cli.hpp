#pragma once

#include <string>
#include <vector>

namespace zsl {

/// Entry point of the `zsl` tool. Subcommands:
///   synth              write a synthetic dataset directory
///   train              train both encoders, write checkpoint and run log
///   eval               evaluate a checkpoint (zsl | gzsl_nn | gzsl_generated)
///   generate           sample labeled latent features from class embeddings
///   ablate             distances | embeddings | ratio sweeps, one report each
///   export-embeddings  latent means of dataset rows, label in the last column
/// Returns 0 on success, 1 on a runtime error, and CLI11's code on bad usage.
/// The vector overload takes the arguments without the program name.
int run_cli(int argc, char** argv);
int run_cli(const std::vector<std::string>& args);

}  // namespace zsl
