struct P { int id; float w; double d; };
P a, b;
float scale(float s) { return s * 2.0f; }
int main() {
  a.id = 3;
  a.w = scale(1.5f);
  where (a.w > 2.0f) { b = a; }
  b.d = b.w + a.d;
  return a.id;
}
