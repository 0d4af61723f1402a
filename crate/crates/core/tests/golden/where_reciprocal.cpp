double x, y;
int main() {
  where (x != 0.0) { y = 1/x; } elsewhere { y = 0; }
  return 0;
}
