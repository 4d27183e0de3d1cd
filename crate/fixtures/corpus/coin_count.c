extern int unknown();

int main() {
    int i = 0;
    int c = 0;
    int n;
    if (n < 0) return 0;
    while (i < n) {
        if (unknown())
            c++;
        i++;
    }
    assert(c <= n);
    return 0;
}
