int main() {
    int x = 0;
    int y = 0;
    int n;
    if (n < 0) return 0;
    while (x < n) {
        x++;
        y++;
    }
    assert(y == n);
    return 0;
}
