#include <cstdio>

int main() {
  std::puts("lg: command-line interface not wired up yet");
  return 1;
}
