int main() {
    int x = 0;
    int n;
    if (n < 0) return 0;
    while (x < n) {
        x = x + 2;
    }
    assert(x <= n + 1);
    return 0;
}
