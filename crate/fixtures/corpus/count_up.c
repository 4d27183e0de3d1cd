int main() {
    int i = 0;
    int n;
    if (n < 0) return 0;
    while (i < n) {
        i++;
    }
    assert(i == n);
    return 0;
}
